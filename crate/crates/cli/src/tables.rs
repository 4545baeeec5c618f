//! CSV row types. Every file starts with its header, even when empty.

use crate::error::CliError;
use serde::Serialize;
use std::path::Path;
use tumblelift::lift_controller::LiftEvent;
use tumblelift::sim::Snapshot;
use tumblelift::tumble_planner::PushStep;

pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

pub fn write_csv<T: CsvRow>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_to_io(path, e))?;
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

fn csv_to_io(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Argument(format!("{other:?}")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRow {
    pub loop_index: usize,
    pub arm: String,
    pub outcome: String,
    pub d: f64,
    pub alpha_before_deg: f64,
    pub alpha_after_deg: f64,
    pub q: f64,
    pub f_length: f64,
    pub f_load: f64,
    pub f_grasps: f64,
    pub theta_deg: f64,
    pub force_proxy: f64,
}

impl CsvRow for EventRow {
    const HEADER: &'static [&'static str] = &[
        "loop_index",
        "arm",
        "outcome",
        "d",
        "alpha_before_deg",
        "alpha_after_deg",
        "q",
        "f_length",
        "f_load",
        "f_grasps",
        "theta_deg",
        "force_proxy",
    ];
}

impl From<&LiftEvent> for EventRow {
    fn from(e: &LiftEvent) -> Self {
        EventRow {
            loop_index: e.loop_index,
            arm: e.arm.to_string(),
            outcome: e.outcome.clone(),
            d: e.d,
            alpha_before_deg: e.alpha_before.to_degrees(),
            alpha_after_deg: e.alpha_after.to_degrees(),
            q: e.q,
            f_length: e.f.f_length,
            f_load: e.f.f_load,
            f_grasps: e.f.f_grasps,
            theta_deg: e.theta.to_degrees(),
            force_proxy: e.force_proxy,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub t_i: f64,
    pub state_kind: &'static str,
    pub rotation_deg: f64,
    pub p1_x: f64,
    pub p1_y: f64,
    pub f0_norm: f64,
    pub f1_norm: f64,
    pub t_norm: f64,
    pub objective: f64,
    pub active_edge: usize,
}

impl CsvRow for TrajectoryRow {
    const HEADER: &'static [&'static str] = &[
        "t_i",
        "state_kind",
        "rotation_deg",
        "p1_x",
        "p1_y",
        "f0_norm",
        "f1_norm",
        "t_norm",
        "objective",
        "active_edge",
    ];
}

impl From<&PushStep> for TrajectoryRow {
    fn from(s: &PushStep) -> Self {
        TrajectoryRow {
            t_i: s.t_i,
            state_kind: s.state_kind.label(),
            rotation_deg: s.plate_rotation.to_degrees(),
            p1_x: s.push_point.x,
            p1_y: s.push_point.y,
            f0_norm: s.f0.norm(),
            f1_norm: s.f1.norm(),
            t_norm: s.t.norm(),
            objective: s.objective_value,
            active_edge: s.active_edge,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotRow {
    pub phase: String,
    pub tilt_deg: f64,
    pub pulled_total: f64,
    pub hook_height: f64,
}

impl CsvRow for SnapshotRow {
    const HEADER: &'static [&'static str] = &["phase", "tilt_deg", "pulled_total", "hook_height"];
}

impl From<&Snapshot> for SnapshotRow {
    fn from(s: &Snapshot) -> Self {
        SnapshotRow {
            phase: s.phase.to_string(),
            tilt_deg: s.tilt_deg,
            pulled_total: s.pulled_total,
            hook_height: s.hook_height,
        }
    }
}

/// One selected pull in a weight sweep; the raw data behind the summary table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPullRow {
    pub weight: String,
    pub seed: u64,
    pub loop_index: usize,
    pub arm: String,
    pub d: f64,
    pub force_proxy: f64,
    pub theta_deg: f64,
    pub goal_x: f64,
    pub goal_y: f64,
    pub goal_z: f64,
}

impl CsvRow for SweepPullRow {
    const HEADER: &'static [&'static str] = &[
        "weight",
        "seed",
        "loop_index",
        "arm",
        "d",
        "force_proxy",
        "theta_deg",
        "goal_x",
        "goal_y",
        "goal_z",
    ];
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRunRow {
    pub weight: String,
    pub seed: u64,
    pub status: String,
    pub action_count: usize,
}

impl CsvRow for SweepRunRow {
    const HEADER: &'static [&'static str] = &["weight", "seed", "status", "action_count"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSummaryRow {
    pub weight: String,
    pub seeds: usize,
    pub runs_ok: usize,
    pub mean_actions: f64,
    pub mean_distance: f64,
    pub mean_force_proxy: f64,
    pub mean_theta_deg: f64,
}

impl CsvRow for WeightSummaryRow {
    const HEADER: &'static [&'static str] = &[
        "weight",
        "seeds",
        "runs_ok",
        "mean_actions",
        "mean_distance",
        "mean_force_proxy",
        "mean_theta_deg",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub cell: String,
    pub section: String,
    pub row: String,
    pub status: String,
    pub n_steps: usize,
    pub oscillation: f64,
    pub max_spacing: f64,
    pub max_direction_change_deg: f64,
    pub second_half_mean_height: f64,
    pub edge_switch_index: Option<usize>,
    pub max_f1: f64,
}

impl CsvRow for AblationRow {
    const HEADER: &'static [&'static str] = &[
        "cell",
        "section",
        "row",
        "status",
        "n_steps",
        "oscillation",
        "max_spacing",
        "max_direction_change_deg",
        "second_half_mean_height",
        "edge_switch_index",
        "max_f1",
    ];
}
