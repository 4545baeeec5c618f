//! Per-run summary written as `report.json`.
//!
//! Wall-clock values are kept out of the serialized report so the same scenario
//! and seed always produce the same bytes; they go to `timings.json` instead.

use serde::{Deserialize, Serialize};
use tumblelift::pipeline::{PhaseTimings, RunOutcome};
use tumblelift::{ArmSide, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullRecord {
    pub loop_index: usize,
    pub arm: ArmSide,
    pub distance: f64,
    pub force_proxy: f64,
    #[serde(skip)]
    pub plan_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TumbleSummary {
    pub n_steps: usize,
    pub edge_switch_index: Option<usize>,
    pub max_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub action_count: usize,
    pub total_distance: f64,
    pub mean_distance: f64,
    pub mean_force_proxy: f64,
    #[serde(skip)]
    pub mean_plan_time_s: f64,
}

impl Totals {
    pub fn from_records(records: &[PullRecord]) -> Self {
        let n = records.len();
        let mean = |f: fn(&PullRecord) -> f64| {
            if n == 0 {
                0.0
            } else {
                records.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Totals {
            action_count: n,
            total_distance: records.iter().map(|r| r.distance).sum(),
            mean_distance: mean(|r| r.distance),
            mean_force_proxy: mean(|r| r.force_proxy),
            mean_plan_time_s: mean(|r| r.plan_time_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_id: String,
    pub seed: u64,
    pub weights: [f64; 3],
    pub pulls: Vec<PullRecord>,
    pub failures: usize,
    pub tumble: TumbleSummary,
    pub totals: Totals,
    pub final_phase: String,
    pub final_tilt_deg: f64,
    pub lift_tilt_deg: f64,
}

impl RunReport {
    pub fn from_outcome(s: &Scenario, seed: u64, o: &RunOutcome) -> Self {
        let pulls: Vec<PullRecord> = o
            .lift
            .pulls()
            .map(|e| PullRecord {
                loop_index: e.loop_index,
                arm: e.arm,
                distance: e.d,
                force_proxy: e.force_proxy,
                plan_time_s: e.plan_time_s,
            })
            .collect();
        let totals = Totals::from_records(&pulls);
        RunReport {
            scenario_id: s.id.clone(),
            seed,
            weights: [s.quality_weights.x, s.quality_weights.y, s.quality_weights.z],
            pulls,
            failures: o.lift.loop_state.failures.len(),
            tumble: TumbleSummary {
                n_steps: o.trajectory.steps.len(),
                edge_switch_index: o.trajectory.edge_switch_index,
                max_f1: o.trajectory.max_f1(),
            },
            totals,
            final_phase: o.final_state.phase.to_string(),
            final_tilt_deg: o.final_state.plate_tilt().to_degrees(),
            lift_tilt_deg: o.lift.final_state.plate_tilt().to_degrees(),
        }
    }

    /// Largest gap between the stored averages and ones recomputed from the records.
    pub fn averages_drift(&self) -> f64 {
        let t = Totals::from_records(&self.pulls);
        [
            t.mean_distance - self.totals.mean_distance,
            t.mean_force_proxy - self.totals.mean_force_proxy,
            t.total_distance - self.totals.total_distance,
            t.action_count as f64 - self.totals.action_count as f64,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub phases: PhaseTimings,
    pub pull_plan_time_s: Vec<f64>,
    pub mean_plan_time_s: f64,
}

impl TimingReport {
    pub fn new(report: &RunReport, o: &RunOutcome) -> Self {
        TimingReport {
            phases: o.timings,
            pull_plan_time_s: report.pulls.iter().map(|p| p.plan_time_s).collect(),
            mean_plan_time_s: report.totals.mean_plan_time_s,
        }
    }
}
