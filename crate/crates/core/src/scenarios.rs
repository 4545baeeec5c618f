//! Built-in desk-scale scenarios for the three reference plates.

use crate::core_types::{
    ArmSide, ArmSpec, Layout, ObstacleBox, PlateSpec, RopeState, Scenario, Segment3, TumbleParams, Vec2, Vec3, P3,
};
use crate::sim::Sim;

pub const ELEMENT_LENGTH: f64 = 30.0;
pub const ELEMENT_RADIUS: f64 = 6.0;
pub const PULLEY_RATIO: f64 = 2.0;
pub const PLATE_Y: f64 = 250.0;
pub const SHOULDER_Z: f64 = 450.0;

pub fn arm(side: ArmSide) -> ArmSpec {
    let sx = match side {
        ArmSide::Left => -1.0,
        ArmSide::Right => 1.0,
    };
    ArmSpec {
        name: side,
        shoulder: P3::new(100.0 * sx, 0.0, SHOULDER_Z),
        reach_min: 120.0,
        reach_max: 550.0,
        cone_half_angle: 80f64.to_radians(),
        body_segments: vec![
            Segment3::new(P3::new(0.0, -80.0, 0.0), P3::new(0.0, -80.0, SHOULDER_Z + 100.0)),
            Segment3::new(P3::new(-100.0, -80.0, SHOULDER_Z), P3::new(100.0, -80.0, SHOULDER_Z)),
        ],
        link_radius: 30.0,
        gripper_box: Vec3::new(30.0, 80.0, 130.0),
        parked_wrist: P3::new(260.0 * sx, -60.0, 330.0),
    }
}

/// Assemble a scenario with the rope hanging from `pin` (cross-section coordinates).
pub fn build(id: &str, plate: PlateSpec, pin: Vec2, alpha_thld_deg: f64, f1_sq_max: f64) -> Scenario {
    let table_height = 0.0;
    let layout = Layout {
        edge_x: pin.x,
        plate_y: PLATE_Y,
    };
    let pin_world = layout.to_world(&pin, table_height);
    let sim = Sim::new(plate.clone(), &pin_world, layout, table_height);
    let hook = sim.hook_world(0.0);
    let n = ((pin_world.z - table_height - 20.0) / ELEMENT_LENGTH).floor().max(1.0) as usize;
    let rope = RopeState::hanging(pin_world, hook, n, ELEMENT_LENGTH, ELEMENT_RADIUS, PULLEY_RATIO);
    Scenario {
        id: id.to_string(),
        plate,
        layout,
        arms: [arm(ArmSide::Left), arm(ArmSide::Right)],
        rope,
        table_height,
        alpha_thld: alpha_thld_deg.to_radians(),
        quality_weights: Vec3::new(1.0, 1.0, 1.0),
        goal_sample_count: 200,
        grasps_per_element: 24,
        sweep_steps: 20,
        force_cap: 200.0,
        max_loops: 40,
        obstacles: Vec::new(),
        tumble_params: TumbleParams {
            f1_sq_max,
            ..TumbleParams::default()
        },
        noise_sigma_angle: 0.0,
        rng_seed: 7,
    }
}

pub fn acrylic() -> Scenario {
    build("acrylic", PlateSpec::acrylic(), Vec2::new(-44.0, 278.0), 70.0, 30.0)
}

pub fn stainless() -> Scenario {
    build("stainless", PlateSpec::stainless(), Vec2::new(-122.0, 270.0), 60.0, 400.0)
}

pub fn plywood() -> Scenario {
    build("plywood", PlateSpec::plywood(), Vec2::new(-50.0, 490.0), 80.0, 30.0)
}

/// Acrylic scenario with a box occupying the centre of the right arm's goal region.
pub fn acrylic_obstacle() -> Scenario {
    let mut s = acrylic();
    s.id = "acrylic_obstacle".to_string();
    s.obstacles.push(ObstacleBox {
        center: P3::new(200.0, 200.0, 150.0),
        half_extents: Vec3::new(70.0, 70.0, 70.0),
    });
    s
}

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "acrylic" => Some(acrylic()),
        "stainless" => Some(stainless()),
        "plywood" => Some(plywood()),
        "acrylic_obstacle" => Some(acrylic_obstacle()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["acrylic", "stainless", "plywood", "acrylic_obstacle"];
