//! Deterministic quasi-static ground truth for the pulley, rope and plate.

use crate::core_types::{Layout, PlateSpec, Pose2, RopeState, Vec2, P3};
use crate::tumble_planner::{plate_point, plate_pose_at, EdgeContactModel, PushStep, StateKind};
use crate::PlanError;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Lifting,
    Tumbling,
    Returning,
    Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Lifting => "Lifting",
            Phase::Tumbling => "Tumbling",
            Phase::Returning => "Returning",
            Phase::Done => "Done",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub rope: RopeState,
    pub plate_pose: Pose2,
    /// Rotation of the plate from its initial flat pose, in [0, π].
    pub rotation: f64,
    pub active_edge: usize,
    pub phase: Phase,
    pub pulled_total: f64,
    /// Current taut length of the pin–hook rope segment.
    pub rope_len: f64,
    pub initial_rope_len: f64,
    /// Rope fed back toward the pulley during tumbling and return.
    pub fed_total: f64,
    pub rope_held: bool,
}

impl SimState {
    /// Angle between the plate and the table.
    pub fn plate_tilt(&self) -> f64 {
        self.rotation.min(PI - self.rotation).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceProxy {
    pub rope_tension_at_hand: f64,
    pub rope_tilt_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub phase: Phase,
    pub tilt_deg: f64,
    pub pulled_total: f64,
    pub hook_height: f64,
}

/// Static world: plate, pulley pin and their placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim {
    pub plate: PlateSpec,
    pub edges: EdgeContactModel,
    pub pin: Vec2,
    pub layout: Layout,
    pub table_height: f64,
}

const LIFT_LIMIT: f64 = FRAC_PI_2 - 1e-6;
const FLAT_TOL: f64 = 1.0 * PI / 180.0;

impl Sim {
    pub fn new(plate: PlateSpec, pin_world: &P3, layout: Layout, table_height: f64) -> Self {
        let edges = EdgeContactModel::for_plate(&plate);
        Sim {
            pin: layout.to_plane(pin_world, table_height),
            plate,
            edges,
            layout,
            table_height,
        }
    }

    pub fn hook_plane(&self, rotation: f64) -> Vec2 {
        plate_point(rotation, &self.plate, &self.edges, &self.plate.r_h)
    }

    pub fn hook_distance(&self, rotation: f64) -> f64 {
        (self.hook_plane(rotation) - self.pin).norm()
    }

    pub fn hook_world(&self, rotation: f64) -> P3 {
        self.layout.to_world(&self.hook_plane(rotation), self.table_height)
    }

    pub fn initial_state(&self, rope: &RopeState) -> SimState {
        let l0 = self.hook_distance(0.0);
        let mut rope = rope.clone();
        rope.hook_point = self.hook_world(0.0);
        rope.total_pulled = 0.0;
        SimState {
            rope,
            plate_pose: plate_pose_at(0.0, &self.plate, &self.edges).0,
            rotation: 0.0,
            active_edge: 0,
            phase: Phase::Lifting,
            pulled_total: 0.0,
            rope_len: l0,
            initial_rope_len: l0,
            fed_total: 0.0,
            rope_held: true,
        }
    }

    fn with_rotation(&self, state: &SimState, rotation: f64) -> SimState {
        let mut s = state.clone();
        let (pose, edge) = plate_pose_at(rotation, &self.plate, &self.edges);
        s.rotation = rotation;
        s.plate_pose = pose;
        s.active_edge = edge;
        s.rope.hook_point = self.hook_world(rotation);
        s
    }

    /// Root of hook_distance(α) = target on [lo, hi], given opposite signs at the ends.
    fn solve_rotation(&self, target: f64, lo: f64, hi: f64) -> f64 {
        let f = |a: f64| self.hook_distance(a) - target;
        let (mut a, mut b) = (lo, hi);
        let fa = f(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (f(m) > 0.0) == (fa > 0.0) {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-14 {
                break;
            }
        }
        0.5 * (a + b)
    }

    /// Pull `d` mm of rope at the hand; the pin–hook segment shortens by d/ratio.
    pub fn apply_pull(&self, state: &SimState, d: f64) -> Result<SimState, PlanError> {
        if state.phase != Phase::Lifting {
            return Err(wrong_phase(Phase::Lifting, state.phase));
        }
        if d <= 0.0 {
            return Ok(state.clone());
        }
        let ratio = state.rope.pulley_ratio;
        let target = state.rope_len - d / ratio;
        if self.hook_distance(LIFT_LIMIT) > target {
            return Err(PlanError::OverLift);
        }
        let alpha = if self.hook_distance(state.rotation) <= target {
            state.rotation
        } else {
            self.solve_rotation(target, state.rotation, LIFT_LIMIT)
        };
        let mut s = self.with_rotation(state, alpha);
        s.rope_len = target;
        s.pulled_total = ratio * (s.initial_rope_len - target);
        s.rope.total_pulled = s.pulled_total;
        Ok(s)
    }

    /// Move the free strand so it runs taut toward `hand`, then hangs.
    pub fn redrape(&self, state: &SimState, hand: Option<P3>) -> SimState {
        let mut s = state.clone();
        s.rope = s.rope.draped(hand);
        s
    }

    pub fn hand_force_proxy(&self, state: &SimState, goal: &P3, cap: f64) -> ForceProxy {
        let v = goal - state.rope.pin_point;
        let n = v.norm();
        let theta = if n > 0.0 { (-v.z / n).clamp(-1.0, 1.0).acos() } else { 0.0 };
        let raw = self.plate.weight() / state.rope.pulley_ratio / theta.cos();
        let tension = if raw.is_finite() && raw >= 0.0 { raw.min(cap) } else { cap };
        ForceProxy {
            rope_tension_at_hand: tension,
            rope_tilt_theta: theta,
        }
    }

    pub fn begin_tumble(&self, state: &SimState) -> SimState {
        let mut s = state.clone();
        s.phase = Phase::Tumbling;
        s
    }

    /// Set the plate to the step's rotation. A held rope pays out if the hook
    /// moves away from the pin; a loosened rope is left slack.
    pub fn apply_tumble_step(&self, state: &SimState, step: &PushStep) -> Result<SimState, PlanError> {
        if state.phase != Phase::Tumbling {
            return Err(wrong_phase(Phase::Tumbling, state.phase));
        }
        let rotation = step.plate_rotation.max(state.rotation);
        let mut s = self.with_rotation(state, rotation);
        s.rope_held = step.state_kind == StateKind::S;
        let dist = self.hook_distance(rotation);
        if dist > s.rope_len {
            let fed = (dist - s.rope_len) * s.rope.pulley_ratio;
            s.fed_total += fed;
            s.rope_len = dist;
            s.pulled_total = s.rope.pulley_ratio * (s.initial_rope_len - dist);
            s.rope.total_pulled = s.pulled_total;
        }
        Ok(s)
    }

    pub fn begin_return(&self, state: &SimState) -> SimState {
        let mut s = state.clone();
        s.phase = if s.plate_tilt() <= FLAT_TOL { Phase::Done } else { Phase::Returning };
        s
    }

    /// Rope the hands must still feed for the plate to lie fully flat.
    pub fn feed_to_flat(&self, state: &SimState) -> f64 {
        ((self.hook_distance(PI) - state.rope_len) * state.rope.pulley_ratio).max(0.0)
    }

    /// Feed rope back toward the pulley; the plate lowers about its second edge.
    pub fn apply_return(&self, state: &SimState, fed_length: f64) -> Result<SimState, PlanError> {
        if state.phase != Phase::Returning {
            return Err(wrong_phase(Phase::Returning, state.phase));
        }
        if fed_length <= 0.0 {
            return Ok(state.clone());
        }
        let ratio = state.rope.pulley_ratio;
        let target = state.rope_len + fed_length / ratio;
        let alpha = if self.hook_distance(state.rotation) >= target {
            state.rotation
        } else if self.hook_distance(PI) <= target {
            PI
        } else {
            self.solve_rotation(target, state.rotation, PI)
        };
        let mut s = self.with_rotation(state, alpha.max(state.rotation));
        s.rope_len = target;
        s.fed_total += fed_length;
        s.pulled_total = ratio * (s.initial_rope_len - target);
        s.rope.total_pulled = s.pulled_total;
        if s.plate_tilt() <= FLAT_TOL {
            s.phase = Phase::Done;
        }
        Ok(s)
    }

    pub fn hook_height(&self, state: &SimState) -> f64 {
        self.hook_plane(state.rotation).y
    }

    pub fn snapshot(&self, state: &SimState) -> Snapshot {
        Snapshot {
            phase: state.phase,
            tilt_deg: state.plate_tilt().to_degrees(),
            pulled_total: state.pulled_total,
            hook_height: self.hook_height(state),
        }
    }
}

fn wrong_phase(expected: Phase, found: Phase) -> PlanError {
    PlanError::WrongPhase {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
