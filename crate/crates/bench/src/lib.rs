//! Fixtures shared by the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tumblelift::lift_controller::scene_for;
use tumblelift::pipeline::simulator;
use tumblelift::pull_planner::{sample_goals, select_init_element, GoalSample};
use tumblelift::sim::{Sim, SimState};
use tumblelift::tumble_planner::InstantGeometry;
use tumblelift::workspace::{GraspFeasibility, SceneBodies};
use tumblelift::{scenarios, ArmSide, RopeState, Scenario};

/// One ranking problem: the right arm on the flat acrylic plate.
pub struct RankFixture {
    pub scenario: Scenario,
    pub rope: RopeState,
    pub scene: SceneBodies,
    pub init_index: usize,
    pub init_list: Vec<GraspFeasibility>,
    pub samples: Vec<GoalSample>,
}

pub fn rank_fixture() -> RankFixture {
    let scenario = scenarios::acrylic();
    let sim = simulator(&scenario);
    let mut rope = sim.initial_state(&scenario.rope).rope;
    let scene = scene_for(&scenario, &sim, 0.0, None);
    let arm = scenario.arm(ArmSide::Right);
    let (init_index, init_list) = select_init_element(&mut rope, arm, &scene, scenario.grasps_per_element).unwrap();
    let samples = sample_goals(arm, &rope, scenario.table_height, scenario.goal_sample_count, &mut ChaCha8Rng::seed_from_u64(0));
    RankFixture {
        scenario,
        rope,
        scene,
        init_index,
        init_list,
        samples,
    }
}

/// Stainless plate part-way through tumbling, before the tip.
pub fn instant_fixture(rotation: f64) -> (Scenario, InstantGeometry) {
    let s = scenarios::stainless();
    let sim = simulator(&s);
    let g = InstantGeometry::new(rotation, &s.plate, &sim.edges, &sim.pin);
    (s, g)
}

pub fn flat_sim(name: &str) -> (Sim, SimState) {
    let s = scenarios::by_name(name).expect("preset");
    let sim = simulator(&s);
    let st = sim.initial_state(&s.rope);
    (sim, st)
}
