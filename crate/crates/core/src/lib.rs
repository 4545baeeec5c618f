//! Planning library and quasi-static simulator for lifting a heavy plate with a
//! rope and pulley block, then tumbling it over with a sliding push.
//!
//! Units are millimetres, kilograms, newtons and radians throughout.

pub mod core_types;
pub mod geometry;
pub mod lift_controller;
pub mod pipeline;
pub mod pull_planner;
pub mod scenarios;
pub mod sim;
pub mod tumble_planner;
pub mod workspace;

pub use core_types::*;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no initial grasp is feasible on the element")]
    NoInitialGrasp,
    #[error("no initial pose: every rope element was traversed")]
    NoInitialPose,
    #[error("no sampled goal forms a feasible init-goal pair")]
    NoFeasiblePair,
    #[error("every shared grasp collides along the straight-line pull")]
    MotionPlanFailed,
    #[error("degenerate batch: l_max equals l_min")]
    DegenerateBatch,
    #[error("tilt prediction needs two completed pulls")]
    InsufficientHistory,
    #[error("lift stalled: tilt did not increase")]
    StalledLift,
    #[error("lift failed: both arms report no initial pose")]
    LiftFailed,
    #[error("pull would lift the plate off its contact edge")]
    OverLift,
    #[error("no feasible push at rotation {:.4} deg", rotation.to_degrees())]
    InfeasibleInstant { rotation: f64 },
    #[error("no reachable push point at step {index}")]
    TumbleKinematicsFailed { index: usize },
    #[error("simulator is in phase {found}, expected {expected}")]
    WrongPhase { expected: String, found: String },
}

impl PlanError {
    /// Stable variant name used in logs and exit messages.
    pub fn name(&self) -> &'static str {
        match self {
            PlanError::NoInitialGrasp => "NoInitialGrasp",
            PlanError::NoInitialPose => "NoInitialPose",
            PlanError::NoFeasiblePair => "NoFeasiblePair",
            PlanError::MotionPlanFailed => "MotionPlanFailed",
            PlanError::DegenerateBatch => "DegenerateBatch",
            PlanError::InsufficientHistory => "InsufficientHistory",
            PlanError::StalledLift => "StalledLift",
            PlanError::LiftFailed => "LiftFailed",
            PlanError::OverLift => "OverLift",
            PlanError::InfeasibleInstant { .. } => "InfeasibleInstant",
            PlanError::TumbleKinematicsFailed { .. } => "TumbleKinematicsFailed",
            PlanError::WrongPhase { .. } => "WrongPhase",
        }
    }
}
