//! Tumbling-trajectory ablations over cross-sections and parameter rows.
//!
//! Every row on a section reuses the rotation schedule computed from the
//! baseline parameters, so switching a chaining constraint off changes the
//! optimization and nothing else.

use crate::error::CliError;
use crate::tables::{write_csv, AblationRow, TrajectoryRow};
use crate::{ensure_dir, load_scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use tumblelift::tumble_planner::{
    max_direction_change, max_spacing, oscillation_metric, plan_tumble_scheduled, rotation_schedule,
    second_half_mean_height, EdgeContactModel, TumbleTrajectory,
};
use tumblelift::{PlanError, PlateSpec, TumbleParams, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub mu1: Option<f64>,
    pub f1_sq_max: f64,
    pub n_steps: usize,
    pub v_max: f64,
    pub gamma_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub id: String,
    /// Scenario file or preset name supplying the plate and pulley pin.
    pub scenario: String,
    /// Plate rotation where tumbling starts; defaults to the scenario's lift threshold.
    pub start_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RowSpec {
    pub id: String,
    pub speed_bound: Option<bool>,
    pub direction_bound: Option<bool>,
    pub v_max: Option<f64>,
    pub gamma_deg: Option<f64>,
    pub mu1: Option<f64>,
    /// Centre of mass as fractions of (h, w).
    pub r_g_frac: Option<[f64; 2]>,
    /// Hook point as fractions of (h, w).
    pub r_h_frac: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationMatrix {
    pub baseline: Baseline,
    #[serde(rename = "section")]
    pub sections: Vec<Section>,
    #[serde(rename = "row")]
    pub rows: Vec<RowSpec>,
}

impl AblationMatrix {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn base_params(&self) -> TumbleParams {
        TumbleParams {
            f1_sq_max: self.baseline.f1_sq_max,
            n_steps: self.baseline.n_steps,
            v_max: self.baseline.v_max,
            gamma: self.baseline.gamma_deg.to_radians(),
            ..TumbleParams::default()
        }
    }
}

impl RowSpec {
    pub fn params(&self, base: &TumbleParams) -> TumbleParams {
        let mut p = *base;
        if let Some(v) = self.v_max {
            p.v_max = v;
        }
        if let Some(g) = self.gamma_deg {
            p.gamma = g.to_radians();
        }
        if self.speed_bound == Some(false) {
            p.v_max = f64::INFINITY;
        }
        if self.direction_bound == Some(false) {
            p.gamma = PI;
        }
        p
    }

    pub fn plate(&self, base: &PlateSpec) -> PlateSpec {
        let mut p = base.clone();
        if let Some(m) = self.mu1 {
            p.mu1 = m;
        }
        if let Some([a, b]) = self.r_g_frac {
            p.r_g = Vec2::new(a * p.h, b * p.w);
        }
        if let Some([a, b]) = self.r_h_frac {
            p.r_h = Vec2::new(a * p.h, b * p.w);
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub id: String,
    pub section: String,
    pub row: String,
    pub result: Result<TumbleTrajectory, PlanError>,
}

impl Cell {
    pub fn metrics(&self) -> AblationRow {
        let mut r = AblationRow {
            cell: self.id.clone(),
            section: self.section.clone(),
            row: self.row.clone(),
            status: "ok".to_string(),
            n_steps: 0,
            oscillation: 0.0,
            max_spacing: 0.0,
            max_direction_change_deg: 0.0,
            second_half_mean_height: 0.0,
            edge_switch_index: None,
            max_f1: 0.0,
        };
        match &self.result {
            Ok(t) => {
                r.n_steps = t.steps.len();
                r.oscillation = oscillation_metric(t);
                r.max_spacing = max_spacing(t);
                r.max_direction_change_deg = max_direction_change(t).to_degrees();
                r.second_half_mean_height = second_half_mean_height(t);
                r.edge_switch_index = t.edge_switch_index;
                r.max_f1 = t.max_f1();
            }
            Err(e) => r.status = e.name().to_string(),
        }
        r
    }
}

pub fn run_matrix(m: &AblationMatrix) -> Result<Vec<Cell>, CliError> {
    let base = m.base_params();
    let mut jobs = Vec::new();
    for sec in &m.sections {
        let s = load_scenario(&sec.scenario)?;
        let mut plate = s.plate.clone();
        if let Some(mu) = m.baseline.mu1 {
            plate.mu1 = mu;
        }
        let start = sec.start_deg.map(f64::to_radians).unwrap_or(s.alpha_thld);
        for row in &m.rows {
            jobs.push((sec.id.clone(), row.clone(), plate.clone(), s.pin_plane(), start));
        }
    }
    Ok(jobs
        .par_iter()
        .map(|(sec, row, base_plate, pin, start)| {
            let plate = row.plate(base_plate);
            let edges = EdgeContactModel::for_plate(&plate);
            let schedule = rotation_schedule(&plate, &edges, &base, *start);
            let params = row.params(&base);
            let result = plan_tumble_scheduled(&plate, &edges, &params, pin, *start, &schedule, &|_| true);
            Cell {
                id: format!("{sec}__{}", row.id),
                section: sec.clone(),
                row: row.id.clone(),
                result,
            }
        })
        .collect())
}

/// Writes one trajectory CSV per solved cell under `trajectories/` and `metrics.csv`.
pub fn write_matrix(out: &Path, cells: &[Cell]) -> Result<Vec<AblationRow>, CliError> {
    let traj_dir = out.join("trajectories");
    ensure_dir(&traj_dir)?;
    for c in cells {
        if let Ok(t) = &c.result {
            let rows: Vec<TrajectoryRow> = t.steps.iter().map(TrajectoryRow::from).collect();
            write_csv(&traj_dir.join(format!("{}.csv", c.id)), &rows)?;
        }
    }
    let metrics: Vec<AblationRow> = cells.iter().map(Cell::metrics).collect();
    write_csv(&out.join("metrics.csv"), &metrics)?;
    Ok(metrics)
}
