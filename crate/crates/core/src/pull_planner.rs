//! Goal sampling, init-goal pair scoring and straight-line pull commands.

use crate::core_types::{ArmSide, ArmSpec, Pose3, RopeState, Vec3, P3};
use crate::workspace::{
    evaluate_grasp, feasibility_list, goal_element_pose, world_grasp, GraspFeasibility, GraspPose, SceneBodies,
    SharedGraspSet,
};
use crate::PlanError;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSample {
    pub point: P3,
    pub l_i: f64,
    pub theta_i: f64,
}

impl GoalSample {
    pub fn new(point: P3, pin: &P3) -> Self {
        let v = point - pin;
        let l_i = v.norm();
        let theta_i = if l_i > 0.0 {
            (v.dot(&-Vec3::z()) / l_i).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        GoalSample { point, l_i, theta_i }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityVector {
    pub f_length: f64,
    pub f_load: f64,
    pub f_grasps: f64,
}

impl QualityVector {
    pub fn as_vector(&self) -> Vec3 {
        Vec3::new(self.f_length, self.f_load, self.f_grasps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitGoalPair {
    pub init_element_index: usize,
    pub sample_index: usize,
    pub goal: GoalSample,
    pub shared: SharedGraspSet,
    pub f: QualityVector,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullCommand {
    pub arm: ArmSide,
    pub grasp: GraspPose,
    pub start: Pose3,
    pub end: Pose3,
    pub d: f64,
}

impl PullCommand {
    /// Same straight line, stopped after `len` mm.
    pub fn truncated(&self, len: f64) -> PullCommand {
        if len >= self.d || self.d <= 0.0 {
            return *self;
        }
        let t = (len / self.d).max(0.0);
        PullCommand {
            end: self.start.lerp_slerp(&self.end, t),
            d: len.max(0.0),
            ..*self
        }
    }

    pub fn start_point(&self) -> P3 {
        P3::from(self.start.translation.vector)
    }

    pub fn end_point(&self) -> P3 {
        P3::from(self.end.translation.vector)
    }
}

/// Topmost valid element with at least one feasible grasp. Elements scanned
/// on the way down without a feasible grasp are invalidated.
pub fn select_init_element(
    rope: &mut RopeState,
    arm: &ArmSpec,
    scene: &SceneBodies,
    k: usize,
) -> Result<(usize, Vec<GraspFeasibility>), PlanError> {
    for i in 0..rope.elements.len() {
        if !rope.elements[i].valid {
            continue;
        }
        let list = feasibility_list(arm, &rope.elements[i], scene, k);
        if list.iter().any(|f| f.feasible()) {
            return Ok((i, list));
        }
        rope.elements[i].valid = false;
    }
    Err(PlanError::NoInitialPose)
}

/// Uniform rejection samples in the arm's reach shell, below the pin and above the table.
pub fn sample_goals<R: Rng>(arm: &ArmSpec, rope: &RopeState, table_height: f64, n: usize, rng: &mut R) -> Vec<GoalSample> {
    let r = arm.reach_max;
    let c = arm.shoulder;
    let z_lo = (c.z - r).max(table_height);
    let z_hi = (c.z + r).min(rope.pin_point.z);
    let mut out = Vec::with_capacity(n);
    if z_hi <= z_lo {
        return out;
    }
    let budget = 100_000 * n.max(1);
    let mut tries = 0;
    while out.len() < n && tries < budget {
        tries += 1;
        let p = P3::new(
            rng.random_range(c.x - r..c.x + r),
            rng.random_range(c.y - r..c.y + r),
            rng.random_range(z_lo..z_hi),
        );
        let d = (p - c).norm();
        if d < arm.reach_min || d > arm.reach_max || p.z <= table_height || p.z >= rope.pin_point.z {
            continue;
        }
        out.push(GoalSample::new(p, &rope.pin_point));
    }
    out
}

pub fn quality_length(l_i: f64, l_min: f64, l_max: f64) -> Result<f64, PlanError> {
    if !(l_max > l_min) {
        return Err(PlanError::DegenerateBatch);
    }
    Ok(((l_i - l_min) / (l_max - l_min)).clamp(0.0, 1.0))
}

pub fn quality_load(theta_i: f64) -> f64 {
    theta_i.cos().clamp(0.0, 1.0)
}

pub fn quality_grasps(shared: &SharedGraspSet) -> Result<f64, PlanError> {
    if shared.n_init == 0 {
        return Err(PlanError::NoInitialGrasp);
    }
    Ok(shared.n_goal as f64 / shared.n_init as f64)
}

pub fn score(weights: &Vec3, f: &QualityVector) -> f64 {
    weights.dot(&f.as_vector())
}

/// Shared set for one goal, given the grasps already feasible at the init element.
pub fn shared_for_goal(init_ok: &[GraspPose], goal_pose: &Pose3, arm: &ArmSpec, scene: &SceneBodies) -> SharedGraspSet {
    let members: Vec<GraspPose> = init_ok
        .iter()
        .filter(|g| evaluate_grasp(arm, goal_pose, g, scene).feasible())
        .copied()
        .collect();
    SharedGraspSet {
        n_init: init_ok.len(),
        n_goal: members.len(),
        members,
    }
}

/// Every feasible pair, best first: Q descending, then lower sample index.
pub fn rank_pairs(
    rope: &RopeState,
    init_index: usize,
    init_list: &[GraspFeasibility],
    arm: &ArmSpec,
    scene: &SceneBodies,
    weights: &Vec3,
    samples: &[GoalSample],
) -> Result<Vec<InitGoalPair>, PlanError> {
    let init_ok: Vec<GraspPose> = init_list.iter().filter(|f| f.feasible()).map(|f| f.grasp).collect();
    if init_ok.is_empty() {
        return Err(PlanError::NoInitialGrasp);
    }
    let evaluated: Vec<(usize, SharedGraspSet)> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pose = goal_element_pose(&rope.pin_point, &s.point);
            (i, shared_for_goal(&init_ok, &pose, arm, scene))
        })
        .filter(|(_, sh)| sh.n_goal >= 1)
        .collect();
    if evaluated.is_empty() {
        return Err(PlanError::NoFeasiblePair);
    }
    let l_min = evaluated.iter().map(|(i, _)| samples[*i].l_i).fold(f64::INFINITY, f64::min);
    let l_max = evaluated.iter().map(|(i, _)| samples[*i].l_i).fold(f64::NEG_INFINITY, f64::max);
    let mut pairs: Vec<InitGoalPair> = evaluated
        .into_iter()
        .map(|(i, shared)| {
            let s = samples[i];
            let f = QualityVector {
                f_length: quality_length(s.l_i, l_min, l_max).unwrap_or(1.0),
                f_load: quality_load(s.theta_i),
                f_grasps: quality_grasps(&shared).unwrap_or(0.0),
            };
            InitGoalPair {
                init_element_index: init_index,
                sample_index: i,
                goal: s,
                q: score(weights, &f),
                shared,
                f,
            }
        })
        .collect();
    pairs.sort_by(|a, b| b.q.total_cmp(&a.q).then(a.sample_index.cmp(&b.sample_index)));
    Ok(pairs)
}

pub fn select_best_pair(
    rope: &RopeState,
    init_index: usize,
    init_list: &[GraspFeasibility],
    arm: &ArmSpec,
    scene: &SceneBodies,
    weights: &Vec3,
    samples: &[GoalSample],
) -> Result<InitGoalPair, PlanError> {
    rank_pairs(rope, init_index, init_list, arm, scene, weights, samples).map(|mut v| v.swap_remove(0))
}

/// First shared grasp whose gripper sweep along the straight line stays collision-free.
pub fn plan_pull(
    pair: &InitGoalPair,
    rope: &RopeState,
    arm: &ArmSpec,
    scene: &SceneBodies,
    sweep_steps: usize,
) -> Result<PullCommand, PlanError> {
    let init_pose = rope.elements[pair.init_element_index].frame();
    let goal_pose = goal_element_pose(&rope.pin_point, &pair.goal.point);
    let steps = sweep_steps.max(1);
    for g in &pair.shared.members {
        let start = world_grasp(&init_pose, g);
        let end = world_grasp(&goal_pose, g);
        let clear = (0..=steps).all(|j| {
            let pose = start.lerp_slerp(&end, j as f64 / steps as f64);
            crate::workspace::check_collisions(arm, &pose, scene, *g).collision_free
        });
        if clear {
            let d = (end.translation.vector - start.translation.vector).norm();
            return Ok(PullCommand {
                arm: arm.name,
                grasp: *g,
                start,
                end,
                d,
            });
        }
    }
    Err(PlanError::MotionPlanFailed)
}
