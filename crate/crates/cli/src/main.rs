use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tumblelift_cli::ablate::{run_matrix, write_matrix, AblationMatrix};
use tumblelift_cli::sweep::{parse_weight, sweep, write_sweep};
use tumblelift_cli::{load_scenario, run, CliError};

#[derive(Parser)]
#[command(name = "tumblelift", version, about = "Lift a plate with a rope and pulley, then tumble it over")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lift, tumble and return one scenario end to end.
    Run {
        /// Scenario TOML file, or a built-in preset name.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "out/run")]
        out: PathBuf,
        /// Defaults to the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare quality weights over seeds 0..N.
    Sweep {
        /// Weights as "a,b,c", space separated.
        #[arg(long, num_args = 1.., required = true)]
        weights: Vec<String>,
        #[arg(long, default_value_t = 15)]
        seeds: u64,
        #[arg(long, default_value = "acrylic")]
        scenario: String,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
    },
    /// Tumbling ablations described by a matrix file.
    Ablate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "out/ablate")]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Run { scenario, out, seed } => {
            let s = load_scenario(&scenario)?;
            let seed = seed.unwrap_or(s.rng_seed);
            let r = run(&s, seed, &out)?;
            println!(
                "{}: {} pulls, mean {:.1} mm, tumble {} steps, final phase {}",
                r.scenario_id, r.totals.action_count, r.totals.mean_distance, r.tumble.n_steps, r.final_phase
            );
        }
        Cmd::Sweep {
            weights,
            seeds,
            scenario,
            out,
        } => {
            let s = load_scenario(&scenario)?;
            let ws = weights.iter().map(|w| parse_weight(w)).collect::<Result<Vec<_>, _>>()?;
            if seeds == 0 {
                return Err(CliError::Argument("need at least one seed".into()));
            }
            let (results, pulls) = sweep(&s, &ws, seeds);
            write_sweep(&out, &results, &pulls)?;
            for r in &results {
                let m = &r.summary;
                println!(
                    "{}: ok {}/{} actions {:.2} distance {:.1} force {:.2}",
                    m.weight, m.runs_ok, m.seeds, m.mean_actions, m.mean_distance, m.mean_force_proxy
                );
            }
        }
        Cmd::Ablate { matrix, out } => {
            let m = AblationMatrix::load(&matrix)?;
            let cells = run_matrix(&m)?;
            for r in write_matrix(&out, &cells)? {
                println!(
                    "{}: {} osc {:.3} spacing {:.2}",
                    r.cell, r.status, r.oscillation, r.max_spacing
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
