//! Closed-loop lifting: alternate arms, predict the next tilt, trim the last pull,
//! re-grip on failure and stop at the threshold.

use crate::core_types::{ArmSide, Pose3, RopeState, Scenario, P3};
use crate::geometry::Obb;
use crate::pull_planner::{plan_pull, rank_pairs, sample_goals, select_init_element, InitGoalPair, PullCommand, QualityVector};
use crate::sim::{Sim, SimState};
use crate::tumble_planner::plate_point;
use crate::workspace::{arm_capsules, SceneBodies};
use crate::{PlanError, Vec2, Vec3};
use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

/// Number of ranked pairs tried before a motion-planning failure is declared.
const PAIR_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureCause {
    NoInitialPose,
    NoFeasiblePair,
    MotionPlanFailed,
    PlateCollisionResolvedByMovingOtherArm,
    ReGrip,
}

impl FailureCause {
    pub fn name(self) -> &'static str {
        match self {
            FailureCause::NoInitialPose => "NoInitialPose",
            FailureCause::NoFeasiblePair => "NoFeasiblePair",
            FailureCause::MotionPlanFailed => "MotionPlanFailed",
            FailureCause::PlateCollisionResolvedByMovingOtherArm => "PlateCollisionResolvedByMovingOtherArm",
            FailureCause::ReGrip => "ReGrip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub loop_index: usize,
    pub arm: ArmSide,
    pub cause: FailureCause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftLoopState {
    pub alpha_history: Vec<f64>,
    pub d_history: Vec<f64>,
    pub active_arm: ArmSide,
    pub alpha_thld: f64,
    pub loop_count: usize,
    pub failures: Vec<FailureRecord>,
}

/// One row of the per-loop event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftEvent {
    pub loop_index: usize,
    pub arm: ArmSide,
    /// "Success" or the failure cause name.
    pub outcome: String,
    pub d: f64,
    pub alpha_before: f64,
    pub alpha_after: f64,
    pub q: f64,
    pub f: QualityVector,
    pub theta: f64,
    pub force_proxy: f64,
    /// Tilt estimate used before executing, when history allowed one.
    pub predicted: Option<f64>,
    /// True tilt after the pull, straight from the simulator.
    pub true_alpha_after: f64,
    pub adjusted: bool,
    pub goal: Option<P3>,
    pub plan_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftResult {
    pub loop_state: LiftLoopState,
    pub events: Vec<LiftEvent>,
    pub final_state: SimState,
}

impl LiftResult {
    pub fn pulls(&self) -> impl Iterator<Item = &LiftEvent> {
        self.events.iter().filter(|e| e.outcome == "Success")
    }

    pub fn arm_sequence(&self) -> Vec<ArmSide> {
        self.pulls().map(|e| e.arm).collect()
    }
}

pub fn predict_tilt(alpha_prev: f64, alpha_cur: f64, d_prev: f64, d_cur: f64) -> Result<f64, PlanError> {
    if !(d_prev > 0.0) {
        return Err(PlanError::InsufficientHistory);
    }
    Ok(alpha_cur + (alpha_cur - alpha_prev) * d_cur / d_prev)
}

pub fn adjust_pull_length(alpha_thld: f64, alpha_cur: f64, alpha_prev: f64, d_prev: f64) -> Result<f64, PlanError> {
    if alpha_cur <= alpha_prev {
        return Err(PlanError::StalledLift);
    }
    Ok(d_prev * (alpha_thld - alpha_cur) / (alpha_cur - alpha_prev))
}

pub fn measure_tilt<R: Rng>(state: &SimState, noise_sigma: f64, rng: &mut R) -> f64 {
    let truth = state.plate_tilt();
    let noisy = if noise_sigma > 0.0 {
        truth + Normal::new(0.0, noise_sigma).expect("finite sigma").sample(rng)
    } else {
        truth
    };
    noisy.clamp(0.0, FRAC_PI_2)
}

/// Plate box at a given rotation, for collision checks.
pub fn plate_obb(sim: &Sim, rotation: f64) -> Obb {
    let p = &sim.plate;
    let c2 = plate_point(rotation, p, &sim.edges, &Vec2::new(p.h / 2.0, p.w / 2.0));
    let (c, s) = (rotation.cos(), rotation.sin());
    let u = sim.layout.dir_to_world(&Vec2::new(c, s));
    let v = sim.layout.dir_to_world(&Vec2::new(-s, c));
    Obb {
        center: sim.layout.to_world(&c2, sim.table_height),
        axes: Matrix3::from_columns(&[u, Vec3::y(), v]),
        half: Vec3::new(p.h / 2.0, p.l / 2.0, p.w / 2.0),
    }
}

pub fn bootstrap_length(scenario: &Scenario, arm: ArmSide) -> f64 {
    let a = scenario.arm(arm);
    150f64.min((a.reach_max - a.reach_min) / 4.0)
}

struct Planned {
    pair: InitGoalPair,
    cmd: PullCommand,
}

fn plan_for_arm<R: Rng>(
    scenario: &Scenario,
    rope: &RopeState,
    arm_side: ArmSide,
    scene: &SceneBodies,
    rng: &mut R,
) -> Result<Planned, PlanError> {
    let arm = scenario.arm(arm_side);
    let mut rope = rope.clone();
    for e in rope.elements.iter_mut() {
        e.valid = true;
    }
    let (idx, list) = select_init_element(&mut rope, arm, scene, scenario.grasps_per_element)?;
    let samples = sample_goals(arm, &rope, scenario.table_height, scenario.goal_sample_count, rng);
    let ranked = rank_pairs(&rope, idx, &list, arm, scene, &scenario.quality_weights, &samples)?;
    for pair in ranked.into_iter().take(PAIR_RETRIES) {
        if let Ok(cmd) = plan_pull(&pair, &rope, arm, scene, scenario.sweep_steps) {
            return Ok(Planned { pair, cmd });
        }
    }
    Err(PlanError::MotionPlanFailed)
}

/// Collision scene at a plate rotation, optionally with the other arm holding a grasp or parked.
pub fn scene_for(scenario: &Scenario, sim: &Sim, rotation: f64, other: Option<(ArmSide, Option<Pose3>)>) -> SceneBodies {
    let mut scene = SceneBodies::empty(scenario.table_height).with_obstacles(&scenario.obstacles);
    scene.plate = Some(plate_obb(sim, rotation));
    if let Some((side, hold)) = other {
        scene.other_arm = arm_capsules(scenario.arm(side), hold.as_ref());
    }
    scene
}

pub fn run_lift_loop<R: Rng>(scenario: &Scenario, sim: &Sim, initial: SimState, rng: &mut R) -> Result<LiftResult, PlanError> {
    let thld = scenario.alpha_thld;
    let mut state = initial;
    let mut ls = LiftLoopState {
        alpha_history: vec![measure_tilt(&state, scenario.noise_sigma_angle, rng)],
        d_history: Vec::new(),
        active_arm: ArmSide::Right,
        alpha_thld: thld,
        loop_count: 0,
        failures: Vec::new(),
    };
    let mut events = Vec::new();
    let mut holding: [Option<Pose3>; 2] = [None, None];
    let mut last_no_pose: Option<ArmSide> = None;
    if *ls.alpha_history.last().unwrap() >= thld {
        return Ok(LiftResult {
            loop_state: ls,
            events,
            final_state: state,
        });
    }
    loop {
        // a correction shorter than one rope element cannot be grasped and pulled
        if let [.., a_prev, a_cur] = ls.alpha_history[..] {
            if let Some(&d_prev) = ls.d_history.last() {
                if a_cur > a_prev && adjust_pull_length(thld, a_cur, a_prev, d_prev)? < scenario.rope.element_length {
                    break;
                }
            }
        }
        if ls.loop_count >= scenario.max_loops {
            return Err(PlanError::LiftFailed);
        }
        let loop_index = ls.loop_count;
        ls.loop_count += 1;
        let side = ls.active_arm;
        let other = side.other();
        let alpha_cur = *ls.alpha_history.last().unwrap();
        let timer = Instant::now();
        let fail = |ls: &mut LiftLoopState, events: &mut Vec<LiftEvent>, cause: FailureCause| {
            ls.failures.push(FailureRecord {
                loop_index,
                arm: side,
                cause,
            });
            events.push(failure_event(loop_index, side, cause, alpha_cur));
        };

        let scene = scene_for(scenario, sim, state.rotation, Some((other, holding[other.index()])));
        let mut planned = plan_for_arm(scenario, &state.rope, side, &scene, rng);
        if planned.is_err() && holding[other.index()].is_some() {
            let parked = scene_for(scenario, sim, state.rotation, Some((other, None)));
            let retry = plan_for_arm(scenario, &state.rope, side, &parked, rng);
            if retry.is_ok() {
                holding[other.index()] = None;
                fail(&mut ls, &mut events, FailureCause::PlateCollisionResolvedByMovingOtherArm);
                planned = retry;
            }
        }
        let Planned { pair, mut cmd } = match planned {
            Ok(p) => p,
            Err(e) => {
                match e {
                    PlanError::NoInitialPose | PlanError::NoInitialGrasp => {
                        fail(&mut ls, &mut events, FailureCause::NoInitialPose);
                        if last_no_pose == Some(other) {
                            return Err(PlanError::LiftFailed);
                        }
                        last_no_pose = Some(side);
                    }
                    PlanError::NoFeasiblePair => {
                        fail(&mut ls, &mut events, FailureCause::NoFeasiblePair);
                        fail(&mut ls, &mut events, FailureCause::ReGrip);
                        last_no_pose = None;
                    }
                    PlanError::MotionPlanFailed => {
                        fail(&mut ls, &mut events, FailureCause::MotionPlanFailed);
                        fail(&mut ls, &mut events, FailureCause::ReGrip);
                        last_no_pose = None;
                    }
                    other_err => return Err(other_err),
                }
                ls.active_arm = other;
                continue;
            }
        };
        last_no_pose = None;

        let n = ls.alpha_history.len();
        let mut predicted = None;
        let mut adjusted = false;
        let history = if let (Some(&d_prev), true) = (ls.d_history.last(), n >= 2) {
            let alpha_prev = ls.alpha_history[n - 2];
            (alpha_cur > alpha_prev).then_some((alpha_prev, d_prev))
        } else {
            None
        };
        match history {
            Some((alpha_prev, d_prev)) => {
                let mut est = predict_tilt(alpha_prev, alpha_cur, d_prev, cmd.d)?;
                if est > thld {
                    let d_hat = adjust_pull_length(thld, alpha_cur, alpha_prev, d_prev)?;
                    if d_hat < cmd.d {
                        cmd = cmd.truncated(d_hat.max(0.0));
                        adjusted = true;
                        est = predict_tilt(alpha_prev, alpha_cur, d_prev, cmd.d)?;
                    }
                }
                predicted = Some(est);
            }
            None => {
                cmd = cmd.truncated(bootstrap_length(scenario, side));
            }
        }

        // the predicted plate pose must not sweep into the other arm
        if let Some(hold) = holding[other.index()] {
            let est = predicted.unwrap_or(alpha_cur).min(FRAC_PI_2 - 1e-6);
            let plate = plate_obb(sim, est);
            if arm_capsules(scenario.arm(other), Some(&hold)).iter().any(|c| c.hits_box(&plate)) {
                holding[other.index()] = None;
                fail(&mut ls, &mut events, FailureCause::PlateCollisionResolvedByMovingOtherArm);
            }
        }
        let plan_time_s = timer.elapsed().as_secs_f64();

        let next = sim.apply_pull(&state, cmd.d)?;
        state = sim.redrape(&next, Some(cmd.end_point()));
        let measured = measure_tilt(&state, scenario.noise_sigma_angle, rng);
        let proxy = sim.hand_force_proxy(&state, &cmd.end_point(), scenario.force_cap);
        events.push(LiftEvent {
            loop_index,
            arm: side,
            outcome: "Success".to_string(),
            d: cmd.d,
            alpha_before: alpha_cur,
            alpha_after: measured,
            q: pair.q,
            f: pair.f,
            theta: proxy.rope_tilt_theta,
            force_proxy: proxy.rope_tension_at_hand,
            predicted,
            true_alpha_after: state.plate_tilt(),
            adjusted,
            goal: Some(cmd.end_point()),
            plan_time_s,
        });
        ls.alpha_history.push(measured);
        ls.d_history.push(cmd.d);
        holding[other.index()] = None;
        holding[side.index()] = Some(cmd.end);
        if measured >= thld {
            break;
        }
        ls.active_arm = other;
    }
    Ok(LiftResult {
        loop_state: ls,
        events,
        final_state: state,
    })
}

fn failure_event(loop_index: usize, arm: ArmSide, cause: FailureCause, alpha: f64) -> LiftEvent {
    LiftEvent {
        loop_index,
        arm,
        outcome: cause.name().to_string(),
        d: 0.0,
        alpha_before: alpha,
        alpha_after: alpha,
        q: 0.0,
        f: QualityVector {
            f_length: 0.0,
            f_load: 0.0,
            f_grasps: 0.0,
        },
        theta: 0.0,
        force_proxy: 0.0,
        predicted: None,
        true_alpha_after: alpha,
        adjusted: false,
        goal: None,
        plan_time_s: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_arithmetic() {
        let r = |d: f64| d.to_radians();
        assert!((predict_tilt(r(10.0), r(15.0), 100.0, 100.0).unwrap() - r(20.0)).abs() < 1e-12);
        assert!((predict_tilt(r(10.0), r(15.0), 100.0, 50.0).unwrap() - r(17.5)).abs() < 1e-12);
        assert_eq!(predict_tilt(0.3, 0.3, 80.0, 80.0).unwrap(), 0.3);
        assert_eq!(predict_tilt(0.1, 0.2, 0.0, 10.0), Err(PlanError::InsufficientHistory));
    }

    #[test]
    fn adjustment_arithmetic() {
        let r = |d: f64| d.to_radians();
        assert!((adjust_pull_length(r(70.0), r(60.0), r(50.0), 100.0).unwrap() - 100.0).abs() < 1e-9);
        assert!((adjust_pull_length(r(70.0), r(65.0), r(55.0), 100.0).unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(adjust_pull_length(r(70.0), r(50.0), r(50.0), 100.0), Err(PlanError::StalledLift));
    }
}
