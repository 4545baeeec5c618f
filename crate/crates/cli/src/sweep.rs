//! Quality-weight sweep over seeds.

use crate::error::CliError;
use crate::report::RunReport;
use crate::tables::{write_csv, SweepPullRow, SweepRunRow, WeightSummaryRow};
use crate::ensure_dir;
use rayon::prelude::*;
use std::path::Path;
use tumblelift::pipeline::run_scenario;
use tumblelift::{Scenario, Vec3};

/// Parse "a,b,c" into a weight vector.
pub fn parse_weight(text: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Argument(format!("weight '{text}' is not three comma-separated numbers"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut w = [0.0f64; 3];
    for (k, p) in parts.iter().enumerate() {
        w[k] = p.parse().map_err(|_| bad())?;
        if !(w[k] >= 0.0 && w[k].is_finite()) {
            return Err(CliError::Argument(format!("weight '{text}' has a negative or non-finite entry")));
        }
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(CliError::Argument(format!("weight '{text}' is all zero")));
    }
    Ok(w)
}

pub fn weight_label(w: &[f64; 3]) -> String {
    format!("{}-{}-{}", w[0], w[1], w[2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedStats {
    pub seed: u64,
    /// Planner error name when the run failed.
    pub error: Option<String>,
    pub actions: usize,
    pub mean_distance: f64,
    pub mean_force: f64,
    pub mean_theta_deg: f64,
    pub goals: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSweep {
    pub weight: [f64; 3],
    pub seeds: Vec<SeedStats>,
    pub summary: WeightSummaryRow,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Aggregate over successful seeds; each seed contributes its own mean.
pub fn summarize(weight: &[f64; 3], seeds: &[SeedStats]) -> WeightSummaryRow {
    let ok: Vec<&SeedStats> = seeds.iter().filter(|s| s.error.is_none()).collect();
    WeightSummaryRow {
        weight: weight_label(weight),
        seeds: seeds.len(),
        runs_ok: ok.len(),
        mean_actions: mean(ok.iter().map(|s| s.actions as f64)),
        mean_distance: mean(ok.iter().map(|s| s.mean_distance)),
        mean_force_proxy: mean(ok.iter().map(|s| s.mean_force)),
        mean_theta_deg: mean(ok.iter().map(|s| s.mean_theta_deg)),
    }
}

fn one_seed(s: &Scenario, seed: u64) -> (SeedStats, Vec<SweepPullRow>) {
    let label = weight_label(&[s.quality_weights.x, s.quality_weights.y, s.quality_weights.z]);
    match run_scenario(s, seed) {
        Ok(o) => {
            let report = RunReport::from_outcome(s, seed, &o);
            let pulls: Vec<_> = o.lift.pulls().collect();
            let rows: Vec<SweepPullRow> = pulls
                .iter()
                .map(|e| {
                    let g = e.goal.unwrap_or_default();
                    SweepPullRow {
                        weight: label.clone(),
                        seed,
                        loop_index: e.loop_index,
                        arm: e.arm.to_string(),
                        d: e.d,
                        force_proxy: e.force_proxy,
                        theta_deg: e.theta.to_degrees(),
                        goal_x: g.x,
                        goal_y: g.y,
                        goal_z: g.z,
                    }
                })
                .collect();
            let stats = SeedStats {
                seed,
                error: None,
                actions: report.totals.action_count,
                mean_distance: report.totals.mean_distance,
                mean_force: report.totals.mean_force_proxy,
                mean_theta_deg: mean(rows.iter().map(|r| r.theta_deg)),
                goals: rows.iter().map(|r| [r.goal_x, r.goal_y, r.goal_z]).collect(),
            };
            (stats, rows)
        }
        Err(e) => (
            SeedStats {
                seed,
                error: Some(e.name().to_string()),
                actions: 0,
                mean_distance: 0.0,
                mean_force: 0.0,
                mean_theta_deg: 0.0,
                goals: Vec::new(),
            },
            Vec::new(),
        ),
    }
}

/// Run every (weight, seed) cell; seeds are 0..n_seeds.
pub fn sweep(scenario: &Scenario, weights: &[[f64; 3]], n_seeds: u64) -> (Vec<WeightSweep>, Vec<SweepPullRow>) {
    let cells: Vec<(usize, u64)> = (0..weights.len()).flat_map(|k| (0..n_seeds).map(move |s| (k, s))).collect();
    let results: Vec<(SeedStats, Vec<SweepPullRow>)> = cells
        .par_iter()
        .map(|&(k, seed)| {
            let mut s = scenario.clone();
            s.quality_weights = Vec3::from(weights[k]);
            one_seed(&s, seed)
        })
        .collect();
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut it = results.into_iter();
    for w in weights {
        let mut seeds = Vec::new();
        for _ in 0..n_seeds {
            let (st, r) = it.next().expect("one result per cell");
            seeds.push(st);
            rows.extend(r);
        }
        let summary = summarize(w, &seeds);
        out.push(WeightSweep {
            weight: *w,
            seeds,
            summary,
        });
    }
    (out, rows)
}

/// Writes `sweep_summary.csv`, `sweep_runs.csv` and `sweep_pulls.csv` (goal scatter included).
pub fn write_sweep(out: &Path, results: &[WeightSweep], pulls: &[SweepPullRow]) -> Result<(), CliError> {
    ensure_dir(out)?;
    let summary: Vec<WeightSummaryRow> = results.iter().map(|r| r.summary.clone()).collect();
    write_csv(&out.join("sweep_summary.csv"), &summary)?;
    let runs: Vec<SweepRunRow> = results
        .iter()
        .flat_map(|r| {
            r.seeds.iter().map(move |s| SweepRunRow {
                weight: weight_label(&r.weight),
                seed: s.seed,
                status: s.error.clone().unwrap_or_else(|| "ok".to_string()),
                action_count: s.actions,
            })
        })
        .collect();
    write_csv(&out.join("sweep_runs.csv"), &runs)?;
    write_csv(&out.join("sweep_pulls.csv"), pulls)?;
    Ok(())
}
