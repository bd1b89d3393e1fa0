use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rsnlab::harness::{
    load_scenario, run_matrix, to_json, write_reports, HarnessError, MatrixOptions,
};
use rsnlab::policies::BuiltinPolicy;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CELL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rsnlab",
    version,
    about = "Resource sharing network benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (policy, r, replication) matrix and write reports.
    Run {
        scenario: PathBuf,
        /// Comma-separated policy names (nominal, hgi, maxpressure).
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<String>>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<u32>,
        /// Record wall-clock milliseconds per cell (makes output nondeterministic).
        #[arg(long)]
        wall_clock: bool,
        /// Write the event trace of replication 0 for each (policy, r).
        #[arg(long)]
        traces: bool,
    },
    /// Print the lower-bound report as JSON.
    Bound { scenario: PathBuf },
    /// Check a scenario file.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                println!(
                    "ok: {} (I={}, J={}, r={:?})",
                    s.name,
                    s.model.num_resources(),
                    s.model.num_types(),
                    s.r_grid
                );
                ExitCode::SUCCESS
            }
            Err(e) => invalid(e),
        },
        Command::Bound { scenario } => {
            let s = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return invalid(e),
            };
            let report = match rsnlab::bcp::lower_bound_report(&s.model, &Default::default()) {
                Ok(r) => r,
                Err(e) => return invalid(e),
            };
            match to_json(&report) {
                Ok(j) => {
                    print!("{j}");
                    ExitCode::SUCCESS
                }
                Err(e) => failed(e),
            }
        }
        Command::Run {
            scenario,
            policies,
            out,
            seed,
            reps,
            wall_clock,
            traces,
        } => {
            let s = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return invalid(e),
            };
            let policies = match policies
                .map(|v| v.iter().map(|p| p.parse::<BuiltinPolicy>()).collect())
                .transpose()
            {
                Ok(p) => p,
                Err(e) => return invalid(e),
            };
            let opts = MatrixOptions {
                policies,
                seed,
                replications: reps,
                wall_clock,
                keep_traces: traces,
                ..Default::default()
            };
            let res = match run_matrix(&s, &opts) {
                Ok(r) => r,
                Err(e @ (HarnessError::EmptyMatrix(_) | HarnessError::Scenario(_))) => {
                    return invalid(e)
                }
                Err(e) => return failed(e),
            };
            if let Err(e) = write_reports(&res, &out) {
                return failed(e);
            }
            for c in &res.summaries {
                let gap = c.gap.map_or("n/a".to_string(), |g| format!("{g:+.4}"));
                println!(
                    "{:<12} r={:<4} J={:.4} ± {:.4}  gap={gap}",
                    c.policy, c.r, c.mean, c.ci95
                );
            }
            match res.bound.bound_value {
                Some(b) => println!("bound {b:.4} ({:?})", res.bound.bound_kind),
                None => println!("bound infinite ({:?})", res.bound.bound_kind),
            }
            println!("reports written to {}", out.display());
            if res.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &res.failures {
                    eprintln!(
                        "cell {} r={} rep={} failed: {}",
                        f.policy, f.r, f.rep, f.error
                    );
                }
                ExitCode::from(EXIT_CELL)
            }
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_VALIDATION)
}

fn failed(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CELL)
}
