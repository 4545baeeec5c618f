//! Reachability, grasp annotation, shared-grasp reasoning and coarse collision checks.

use crate::core_types::{element_frame, ArmSpec, CylinderElement, ObstacleBox, Pose3, Vec3, P3};
use crate::geometry::{Capsule, Obb};
use crate::PlanError;
use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub element_local_transform: Pose3,
    pub approach_index: usize,
}

impl GraspPose {
    /// Approach direction (gripper z) in the element frame.
    pub fn approach_local(&self) -> Vec3 {
        self.element_local_transform.rotation * Vec3::z()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockingBody {
    None,
    Plate,
    OtherArm,
    SelfBody,
    Table,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspFeasibility {
    pub grasp: GraspPose,
    pub reachable: bool,
    pub collision_free: bool,
    pub blocking_body: BlockingBody,
}

impl GraspFeasibility {
    pub fn feasible(&self) -> bool {
        self.reachable && self.collision_free
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedGraspSet {
    pub n_init: usize,
    pub n_goal: usize,
    pub members: Vec<GraspPose>,
}

/// Everything an arm can collide with, except its own body which lives in `ArmSpec`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBodies {
    pub plate: Option<Obb>,
    pub other_arm: Vec<Capsule>,
    pub obstacles: Vec<Obb>,
    pub table_height: f64,
}

impl SceneBodies {
    pub fn empty(table_height: f64) -> Self {
        SceneBodies {
            plate: None,
            other_arm: Vec::new(),
            obstacles: Vec::new(),
            table_height,
        }
    }

    pub fn with_obstacles(mut self, obstacles: &[ObstacleBox]) -> Self {
        self.obstacles = obstacles
            .iter()
            .map(|o| Obb::axis_aligned(o.center, o.half_extents))
            .collect();
        self
    }
}

/// K grasps per element: K/2 axial angles at uniform increments, each with two wrist flips.
/// Indices 0..K/2 are the unflipped set in increasing angle.
pub fn annotate_grasps(_element: &CylinderElement, k: usize) -> Vec<GraspPose> {
    let n_rot = (k / 2).max(1);
    let mut out = Vec::with_capacity(2 * n_rot);
    for flip in 0..2 {
        for i in 0..n_rot {
            let phi = 2.0 * PI * i as f64 / n_rot as f64;
            let z = Vec3::new(phi.cos(), phi.sin(), 0.0);
            let x = if flip == 0 { Vec3::z() } else { -Vec3::z() };
            let y = z.cross(&x);
            let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
            out.push(GraspPose {
                element_local_transform: Pose3::from_parts(
                    nalgebra::Translation3::identity(),
                    UnitQuaternion::from_rotation_matrix(&rot),
                ),
                approach_index: flip * n_rot + i,
            });
        }
    }
    out
}

/// Pose of the element that ends up at `goal`, oriented along the pin→goal line.
pub fn goal_element_pose(pin: &P3, goal: &P3) -> Pose3 {
    let v = goal - pin;
    let axis = if v.norm() > 1e-12 { v.normalize() } else { -Vec3::z() };
    element_frame(*goal, axis)
}

pub fn world_grasp(element_pose: &Pose3, grasp: &GraspPose) -> Pose3 {
    element_pose * grasp.element_local_transform
}

pub fn wrist_point(arm: &ArmSpec, world_grasp: &Pose3) -> P3 {
    let approach = world_grasp.rotation * Vec3::z();
    P3::from(world_grasp.translation.vector) - approach * arm.gripper_box.z
}

pub fn gripper_obb(arm: &ArmSpec, world_grasp: &Pose3) -> Obb {
    let approach = world_grasp.rotation * Vec3::z();
    let center = P3::from(world_grasp.translation.vector) - approach * (arm.gripper_box.z / 2.0);
    Obb::new(center, world_grasp.rotation, arm.gripper_box / 2.0)
}

/// Collision capsules of an arm holding `world_grasp`, as seen by the other arm.
pub fn arm_capsules(arm: &ArmSpec, world_grasp: Option<&Pose3>) -> Vec<Capsule> {
    match world_grasp {
        Some(g) => {
            let wrist = wrist_point(arm, g);
            let tip = P3::from(g.translation.vector);
            vec![
                Capsule::new(arm.shoulder, wrist, arm.link_radius),
                Capsule::new(wrist, tip, arm.gripper_box.y / 2.0),
            ]
        }
        None => vec![Capsule::new(arm.shoulder, arm.parked_wrist, arm.link_radius)],
    }
}

pub fn check_reachable(arm: &ArmSpec, world_grasp: &Pose3, table_height: f64) -> bool {
    let p = P3::from(world_grasp.translation.vector);
    if p.z <= table_height {
        return false;
    }
    let to_shoulder = arm.shoulder - p;
    let dist = to_shoulder.norm();
    if dist < arm.reach_min || dist > arm.reach_max {
        return false;
    }
    let retreat = -(world_grasp.rotation * Vec3::z());
    let c = (retreat.dot(&to_shoulder) / dist).clamp(-1.0, 1.0);
    c.acos() <= arm.cone_half_angle
}

pub fn check_collisions(arm: &ArmSpec, world_grasp: &Pose3, scene: &SceneBodies, grasp: GraspPose) -> GraspFeasibility {
    let blocking = first_collider(arm, world_grasp, scene);
    GraspFeasibility {
        grasp,
        reachable: true,
        collision_free: blocking == BlockingBody::None,
        blocking_body: blocking,
    }
}

fn first_collider(arm: &ArmSpec, world_grasp: &Pose3, scene: &SceneBodies) -> BlockingBody {
    let gripper = gripper_obb(arm, world_grasp);
    let link = Capsule::new(arm.shoulder, wrist_point(arm, world_grasp), arm.link_radius);
    if gripper.lowest_z() < scene.table_height || link.below(scene.table_height) {
        return BlockingBody::Table;
    }
    if let Some(plate) = &scene.plate {
        if gripper.intersects(plate) || link.hits_box(plate) {
            return BlockingBody::Plate;
        }
    }
    if scene.obstacles.iter().any(|o| gripper.intersects(o) || link.hits_box(o)) {
        return BlockingBody::Obstacle;
    }
    if scene
        .other_arm
        .iter()
        .any(|c| c.hits_box(&gripper) || c.hits_capsule(&link))
    {
        return BlockingBody::OtherArm;
    }
    if arm
        .body_segments
        .iter()
        .any(|s| Capsule::new(s.a, s.b, arm.link_radius).hits_box(&gripper))
    {
        return BlockingBody::SelfBody;
    }
    BlockingBody::None
}

/// Reachability followed by collision checking; collisions are not evaluated
/// for unreachable grasps.
pub fn evaluate_grasp(arm: &ArmSpec, element_pose: &Pose3, grasp: &GraspPose, scene: &SceneBodies) -> GraspFeasibility {
    let w = world_grasp(element_pose, grasp);
    if !check_reachable(arm, &w, scene.table_height) {
        return GraspFeasibility {
            grasp: *grasp,
            reachable: false,
            collision_free: false,
            blocking_body: BlockingBody::None,
        };
    }
    check_collisions(arm, &w, scene, *grasp)
}

pub fn feasibility_list(arm: &ArmSpec, element: &CylinderElement, scene: &SceneBodies, k: usize) -> Vec<GraspFeasibility> {
    let pose = element.frame();
    annotate_grasps(element, k)
        .iter()
        .map(|g| evaluate_grasp(arm, &pose, g, scene))
        .collect()
}

pub fn shared_grasps(
    init_elem: &CylinderElement,
    goal_pose: &Pose3,
    arm: &ArmSpec,
    scene: &SceneBodies,
    k: usize,
) -> Result<SharedGraspSet, PlanError> {
    let init_ok: Vec<GraspPose> = feasibility_list(arm, init_elem, scene, k)
        .into_iter()
        .filter(|f| f.feasible())
        .map(|f| f.grasp)
        .collect();
    if init_ok.is_empty() {
        return Err(PlanError::NoInitialGrasp);
    }
    let members: Vec<GraspPose> = init_ok
        .iter()
        .filter(|g| evaluate_grasp(arm, goal_pose, g, scene).feasible())
        .copied()
        .collect();
    Ok(SharedGraspSet {
        n_init: init_ok.len(),
        n_goal: members.len(),
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_types::{ArmSide, Segment3};

    fn arm() -> ArmSpec {
        ArmSpec {
            name: ArmSide::Right,
            shoulder: P3::new(0.0, 0.0, 400.0),
            reach_min: 100.0,
            reach_max: 500.0,
            cone_half_angle: 80f64.to_radians(),
            body_segments: vec![Segment3::new(P3::new(0.0, -50.0, 0.0), P3::new(0.0, -50.0, 400.0))],
            link_radius: 30.0,
            gripper_box: Vec3::new(30.0, 80.0, 120.0),
            parked_wrist: P3::new(100.0, -50.0, 300.0),
        }
    }

    fn element_at(c: P3) -> CylinderElement {
        CylinderElement {
            start: c + Vec3::new(0.0, 0.0, 15.0),
            end: c - Vec3::new(0.0, 0.0, 15.0),
            radius: 6.0,
            valid: true,
        }
    }

    #[test]
    fn grasp_count_and_spacing() {
        let g = annotate_grasps(&element_at(P3::origin()), 24);
        assert_eq!(g.len(), 24);
        for i in 0..11 {
            let a = g[i].approach_local();
            let b = g[i + 1].approach_local();
            assert!((a.dot(&b).acos() - 30f64.to_radians()).abs() < 1e-12);
        }
    }

    #[test]
    fn reach_boundary() {
        let a = arm();
        let ident = |p: P3, approach: Vec3| {
            let rot = UnitQuaternion::rotation_between(&Vec3::z(), &approach).unwrap();
            Pose3::from_parts(p.coords.into(), rot)
        };
        let outward = Vec3::new(0.0, 1.0, 0.0);
        let far = P3::new(0.0, 501.0, 400.0);
        assert!(!check_reachable(&a, &ident(far, outward), 0.0));
        let mid = P3::new(0.0, 300.0, 400.0);
        assert!(check_reachable(&a, &ident(mid, outward), 0.0));
        let low = P3::new(0.0, 300.0, -1.0);
        assert!(!check_reachable(&a, &ident(low, Vec3::new(0.0, 1.0, -1.0).normalize()), 0.0));
    }
}
