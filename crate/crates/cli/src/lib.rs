//! Experiment runner: single end-to-end runs, weight sweeps and tumbling ablations.

pub mod ablate;
pub mod error;
pub mod report;
pub mod sweep;
pub mod tables;

use std::fs;
use std::path::Path;
use tumblelift::pipeline::{run_scenario, RunOutcome};
use tumblelift::{scenarios, validate_scenario, Scenario};

pub use error::CliError;
pub use report::{RunReport, TimingReport};
use tables::{write_csv, EventRow, SnapshotRow, TrajectoryRow};

/// Load a scenario file; a bare preset name is accepted when no such file exists.
pub fn load_scenario(spec: &str) -> Result<Scenario, CliError> {
    let path = Path::new(spec);
    let scenario = if !path.exists() {
        match scenarios::by_name(spec) {
            Some(s) => s,
            None => return Err(CliError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound))),
        }
    } else {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Scenario::from_toml(&text).map_err(|e| CliError::Parse {
            path: spec.to_string(),
            message: e.to_string(),
        })?
    };
    let report = validate_scenario(&scenario);
    if !report.is_ok() {
        return Err(CliError::Validation {
            path: spec.to_string(),
            report,
        });
    }
    Ok(scenario)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Run lift, tumble and return, then write the event, trajectory and snapshot
/// CSVs plus `report.json` and `timings.json` into `out`.
pub fn run(scenario: &Scenario, seed: u64, out: &Path) -> Result<RunReport, CliError> {
    let outcome = run_scenario(scenario, seed)?;
    let report = RunReport::from_outcome(scenario, seed, &outcome);
    write_run(out, &report, &outcome)?;
    Ok(report)
}

pub fn write_run(out: &Path, report: &RunReport, o: &RunOutcome) -> Result<(), CliError> {
    ensure_dir(out)?;
    let events: Vec<EventRow> = o.lift.events.iter().map(EventRow::from).collect();
    write_csv(&out.join("events.csv"), &events)?;
    let steps: Vec<TrajectoryRow> = o.trajectory.steps.iter().map(TrajectoryRow::from).collect();
    write_csv(&out.join("trajectory.csv"), &steps)?;
    let snaps: Vec<SnapshotRow> = o.snapshots.iter().map(SnapshotRow::from).collect();
    write_csv(&out.join("snapshots.csv"), &snaps)?;
    write_text(&out.join("report.json"), &report.to_json()?)?;
    let timings = TimingReport::new(report, o);
    write_text(&out.join("timings.json"), &serde_json::to_string_pretty(&timings)?)?;
    Ok(())
}
