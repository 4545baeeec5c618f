//! Lift, tumble and return, end to end against the simulator.

use crate::core_types::{ArmSide, Scenario};
use crate::lift_controller::{run_lift_loop, LiftResult};
use crate::pull_planner::PullCommand;
use crate::sim::{Phase, Sim, SimState, Snapshot};
use crate::tumble_planner::{check_kinematics_and_repair, plan_rope_return, plan_tumble, TumbleTrajectory};
use crate::PlanError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Arm that pushes the plate over; it sits on the side the pushing face turns toward.
pub const PUSHING_ARM: ArmSide = ArmSide::Left;
/// Half-width of the face band excluded around an unreachable push point, mm.
pub const REPAIR_BAND: f64 = 5.0;
/// Longest single rope feed during the return, mm.
pub const RETURN_CHUNK: f64 = 100.0;

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub lift_s: f64,
    pub tumble_s: f64,
    pub return_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub lift: LiftResult,
    pub trajectory: TumbleTrajectory,
    pub returns: Vec<PullCommand>,
    /// One snapshot per lift pull, tumble step and return feed, starting with the initial state.
    pub snapshots: Vec<Snapshot>,
    pub final_state: SimState,
    pub timings: PhaseTimings,
}

pub fn simulator(s: &Scenario) -> Sim {
    Sim::new(s.plate.clone(), &s.rope.pin_point, s.layout, s.table_height)
}

pub fn run_scenario(s: &Scenario, seed: u64) -> Result<RunOutcome, PlanError> {
    let sim = simulator(s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = sim.initial_state(&s.rope);
    let mut snapshots = vec![sim.snapshot(&state)];

    let clock = Instant::now();
    let lift = run_lift_loop(s, &sim, state, &mut rng)?;
    let lift_s = clock.elapsed().as_secs_f64();
    {
        let mut replay = sim.initial_state(&s.rope);
        for e in lift.pulls() {
            replay = sim.apply_pull(&replay, e.d)?;
            snapshots.push(sim.snapshot(&replay));
        }
    }

    let clock = Instant::now();
    let mut state = sim.begin_tumble(&lift.final_state);
    let planned = plan_tumble(&s.plate, &sim.edges, &s.tumble_params, &sim.pin, state.rotation)?;
    let trajectory = check_kinematics_and_repair(
        &planned,
        &s.plate,
        &sim.edges,
        &s.tumble_params,
        &sim.pin,
        s.arm(PUSHING_ARM),
        &s.layout,
        s.table_height,
        REPAIR_BAND,
    )?;
    for step in &trajectory.steps {
        state = sim.apply_tumble_step(&state, step)?;
        snapshots.push(sim.snapshot(&state));
    }
    let tumble_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    state = sim.begin_return(&state);
    let returns = plan_rope_return(&sim, &state, &s.arms, RETURN_CHUNK);
    for cmd in &returns {
        if state.phase == Phase::Done {
            break;
        }
        state = sim.apply_return(&state, cmd.d)?;
        snapshots.push(sim.snapshot(&state));
    }
    let return_s = clock.elapsed().as_secs_f64();

    Ok(RunOutcome {
        lift,
        trajectory,
        returns,
        snapshots,
        final_state: state,
        timings: PhaseTimings {
            lift_s,
            tumble_s,
            return_s,
        },
    })
}
