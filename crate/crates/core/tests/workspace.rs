use nalgebra::UnitQuaternion;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tumblelift::geometry::Obb;
use tumblelift::scenarios;
use tumblelift::workspace::*;
use tumblelift::*;

fn element(center: P3, axis: Vec3) -> CylinderElement {
    let a = axis.normalize() * 15.0;
    CylinderElement {
        start: center - a,
        end: center + a,
        radius: 6.0,
        valid: true,
    }
}

fn pose_at(p: P3, approach: Vec3) -> Pose3 {
    let rot = UnitQuaternion::rotation_between(&Vec3::z(), &approach.normalize()).unwrap();
    Pose3::from_parts(p.coords.into(), rot)
}

fn inside(b: &Obb, p: &P3) -> bool {
    let l = b.to_local(p);
    l.x.abs() <= b.half.x && l.y.abs() <= b.half.y && l.z.abs() <= b.half.z
}

/// Independent overlap witness: sample the gripper's solid box on a lattice and test containment.
fn gripper_overlaps(arm: &ArmSpec, g: &Pose3, plate: &Obb) -> bool {
    let half = arm.gripper_box / 2.0;
    let tip = P3::from(g.translation.vector);
    let approach = g.rotation * Vec3::z();
    let center = tip - approach * half.z;
    let n = 6;
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let f = |t: usize| 2.0 * t as f64 / n as f64 - 1.0;
                let local = Vec3::new(f(i) * half.x, f(j) * half.y, f(k) * half.z);
                if inside(plate, &(center + g.rotation * local)) {
                    return true;
                }
            }
        }
    }
    false
}

#[test]
fn annotation_has_uniform_axial_spacing() {
    let g = annotate_grasps(&element(P3::new(0.0, 200.0, 300.0), -Vec3::z()), 24);
    assert_eq!(g.len(), 24);
    for flip in 0..2 {
        for i in 0..12 {
            let a = g[flip * 12 + i].approach_local();
            let b = g[flip * 12 + (i + 1) % 12].approach_local();
            let angle = a.dot(&b).clamp(-1.0, 1.0).acos();
            assert!((angle - 30f64.to_radians()).abs() < 1e-12);
        }
    }
    for (i, x) in g.iter().enumerate() {
        assert_eq!(x.approach_index, i);
    }
}

#[test]
fn unreachable_grasps_skip_collision_checks() {
    let arm = scenarios::arm(ArmSide::Right);
    let far = element(arm.shoulder + Vec3::new(0.0, arm.reach_max + 50.0, 0.0), Vec3::z());
    let mut scene = SceneBodies::empty(0.0);
    scene.plate = Some(Obb::axis_aligned(far.center(), Vec3::new(100.0, 100.0, 100.0)));
    for f in feasibility_list(&arm, &far, &scene, 24) {
        assert!(!f.reachable);
        assert_eq!(f.blocking_body, BlockingBody::None);
    }
}

#[test]
fn reach_examples() {
    let arm = scenarios::arm(ArmSide::Right);
    let s = arm.shoulder;
    let out = Vec3::y();
    assert!(!check_reachable(&arm, &pose_at(s + Vec3::new(0.0, arm.reach_max + 1.0, 0.0), out), 0.0));
    assert!(check_reachable(&arm, &pose_at(s + Vec3::new(0.0, arm.reach_max - 1.0, 0.0), out), 0.0));
    assert!(!check_reachable(&arm, &pose_at(s + Vec3::new(0.0, arm.reach_min - 1.0, 0.0), out), 0.0));
    let mid = (arm.reach_min + arm.reach_max) / 2.0;
    assert!(check_reachable(&arm, &pose_at(s + Vec3::new(0.0, mid, 0.0), out), 0.0));
    // approach pointing back at the shoulder
    assert!(!check_reachable(&arm, &pose_at(s + Vec3::new(0.0, mid, 0.0), -out), 0.0));
    let low = P3::new(s.x, s.y + 100.0, -1.0);
    assert!(!check_reachable(&arm, &pose_at(low, low - s), 0.0));
}

#[test]
fn gripper_in_plate_is_blocked_by_plate() {
    let arm = scenarios::arm(ArmSide::Right);
    let p = arm.shoulder + Vec3::new(0.0, 300.0, -100.0);
    let g = pose_at(p, p - arm.shoulder);
    let mut scene = SceneBodies::empty(0.0);
    let f = check_collisions(&arm, &g, &scene, annotate_grasps(&element(p, Vec3::z()), 24)[0]);
    assert!(f.collision_free);
    assert_eq!(f.blocking_body, BlockingBody::None);
    scene.plate = Some(Obb::axis_aligned(p + Vec3::new(0.0, 20.0, 0.0), Vec3::new(150.0, 20.0, 150.0)));
    let f = check_collisions(&arm, &g, &scene, annotate_grasps(&element(p, Vec3::z()), 24)[0]);
    assert!(!f.collision_free);
    assert_eq!(f.blocking_body, BlockingBody::Plate);
}

#[test]
fn table_and_obstacles_are_named() {
    let arm = scenarios::arm(ArmSide::Right);
    let p = P3::new(250.0, 250.0, 20.0);
    let g = pose_at(p, Vec3::new(0.0, 0.3, 1.0));
    let grasp = annotate_grasps(&element(p, Vec3::z()), 24)[0];
    assert_eq!(check_collisions(&arm, &g, &SceneBodies::empty(0.0), grasp).blocking_body, BlockingBody::Table);
    let q = P3::new(250.0, 250.0, 250.0);
    let g = pose_at(q, q - arm.shoulder);
    let scene = SceneBodies::empty(0.0).with_obstacles(&[ObstacleBox {
        center: q,
        half_extents: Vec3::new(20.0, 20.0, 20.0),
    }]);
    assert_eq!(check_collisions(&arm, &g, &scene, grasp).blocking_body, BlockingBody::Obstacle);
}

#[test]
fn bulky_plate_blocks_every_left_grasp() {
    // A 44 mm board standing beside the rope, leaning over the left arm's side
    // and pressing against the hanging element.
    let arm = scenarios::arm(ArmSide::Left);
    let s = scenarios::plywood();
    let elem = s.rope.elements[3].clone();
    let c = elem.center();
    let tilt = UnitQuaternion::from_axis_angle(&Vec3::y_axis(), 10f64.to_radians());
    let plate = Obb::new(c + tilt * Vec3::new(-16.0, 0.0, 0.0), tilt, Vec3::new(22.0, 250.0, 250.0));
    let mut scene = SceneBodies::empty(0.0);
    scene.plate = Some(plate.clone());
    let list = feasibility_list(&arm, &elem, &scene, 24);
    let reachable: Vec<_> = list.iter().filter(|f| f.reachable).collect();
    assert!(!reachable.is_empty());
    for f in reachable {
        assert_eq!(f.blocking_body, BlockingBody::Plate);
        let w = world_grasp(&elem.frame(), &f.grasp);
        assert!(gripper_overlaps(&arm, &w, &plate));
    }
    assert_eq!(
        shared_grasps(&elem, &elem.frame(), &arm, &scene, 24),
        Err(PlanError::NoInitialGrasp)
    );
}

#[test]
fn identity_goal_shares_everything() {
    let s = scenarios::acrylic();
    let arm = s.arm(ArmSide::Right);
    let elem = &s.rope.elements[0];
    let scene = SceneBodies::empty(0.0);
    let sh = shared_grasps(elem, &elem.frame(), arm, &scene, 24).unwrap();
    assert_eq!(sh.n_goal, sh.n_init);
    let init_ok: Vec<GraspPose> = feasibility_list(arm, elem, &scene, 24)
        .into_iter()
        .filter(|f| f.feasible())
        .map(|f| f.grasp)
        .collect();
    assert_eq!(sh.members, init_ok);
}

#[test]
fn goal_out_of_reach_shares_nothing() {
    let s = scenarios::acrylic();
    let arm = s.arm(ArmSide::Right);
    let elem = &s.rope.elements[0];
    let goal = goal_element_pose(&s.rope.pin_point, &(arm.shoulder + Vec3::new(0.0, arm.reach_max + 100.0, 0.0)));
    let sh = shared_grasps(elem, &goal, arm, &SceneBodies::empty(0.0), 24).unwrap();
    assert_eq!(sh.n_goal, 0);
    assert!(sh.members.is_empty());
}

#[test]
fn randomized_scenes_match_double_loop_intersection() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = scenarios::acrylic();
    let mut checked = 0;
    for _ in 0..60 {
        let side = if rng.random_bool(0.5) { ArmSide::Left } else { ArmSide::Right };
        let arm = s.arm(side);
        let init = element(
            P3::new(rng.random_range(-250.0..250.0), rng.random_range(100.0..400.0), rng.random_range(50.0..450.0)),
            Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), -1.0),
        );
        let goal_pt = P3::new(rng.random_range(-400.0..400.0), rng.random_range(0.0..450.0), rng.random_range(20.0..400.0));
        let goal = goal_element_pose(&s.rope.pin_point, &goal_pt);
        let scene = SceneBodies::empty(0.0).with_obstacles(&[ObstacleBox {
            center: P3::new(rng.random_range(-300.0..300.0), rng.random_range(50.0..400.0), rng.random_range(50.0..400.0)),
            half_extents: Vec3::repeat(rng.random_range(10.0..80.0)),
        }]);
        let grasps = annotate_grasps(&init, 24);
        let at_init: Vec<bool> = grasps.iter().map(|g| evaluate_grasp(arm, &init.frame(), g, &scene).feasible()).collect();
        let at_goal: Vec<bool> = grasps.iter().map(|g| evaluate_grasp(arm, &goal, g, &scene).feasible()).collect();
        let mut expect = Vec::new();
        for (i, g) in grasps.iter().enumerate() {
            for (j, h) in grasps.iter().enumerate() {
                if g.element_local_transform == h.element_local_transform && at_init[i] && at_goal[j] {
                    expect.push(*g);
                }
            }
        }
        match shared_grasps(&init, &goal, arm, &scene, 24) {
            Ok(sh) => {
                assert_eq!(sh.n_init, at_init.iter().filter(|b| **b).count());
                assert_eq!(sh.members, expect);
                assert_eq!(sh.n_goal, expect.len());
                assert!(sh.n_goal <= sh.n_init);
                checked += 1;
            }
            Err(e) => {
                assert_eq!(e, PlanError::NoInitialGrasp);
                assert!(at_init.iter().all(|b| !b));
            }
        }
    }
    assert!(checked >= 10);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn grasps_are_local_and_perpendicular(
        c in prop::array::uniform3(-500.0..500.0f64),
        a in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let axis = Vec3::from(a);
        prop_assume!(axis.norm() > 0.1);
        let e = element(P3::from(c), axis);
        let g = annotate_grasps(&e, 24);
        let reference = annotate_grasps(&element(P3::origin(), -Vec3::z()), 24);
        prop_assert_eq!(&g, &reference);
        let frame = e.frame();
        for x in &g {
            let approach = (frame * x.element_local_transform).rotation * Vec3::z();
            prop_assert!(approach.dot(&e.axis()).abs() < 1e-9);
            prop_assert!((x.element_local_transform.rotation.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn removing_an_obstacle_never_shrinks_the_shared_set(
        gx in -350.0..350.0f64, gy in 50.0..400.0f64, gz in 50.0..400.0f64,
        ox in -300.0..300.0f64, oy in 50.0..400.0f64, oz in 50.0..400.0f64, r in 10.0..80.0f64,
    ) {
        let s = scenarios::acrylic();
        let arm = s.arm(ArmSide::Right);
        let init = &s.rope.elements[0];
        let goal = goal_element_pose(&s.rope.pin_point, &P3::new(gx, gy, gz));
        let free = SceneBodies::empty(0.0);
        let cluttered = free.clone().with_obstacles(&[ObstacleBox { center: P3::new(ox, oy, oz), half_extents: Vec3::repeat(r) }]);
        let a = shared_grasps(init, &goal, arm, &free, 24);
        let b = shared_grasps(init, &goal, arm, &cluttered, 24);
        if let Ok(b) = b {
            let a = a.unwrap();
            prop_assert!(a.n_goal >= b.n_goal);
            for m in &b.members {
                prop_assert!(a.members.contains(m));
            }
        }
    }
}
