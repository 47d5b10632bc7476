use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use maxmono_cli::{load_scenario, run_suite, RunOptions};

/// Runs a verification scenario and writes reports, a convergence table
/// and a summary.
#[derive(Parser, Debug)]
#[command(name = "maxmono", version)]
struct Args {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (defaults to the scenario's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Exact arrangement mode for every check (n ≤ 3).
    #[arg(long)]
    exact: bool,
    /// Checks run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !(args.tol_scale > 0.0 && args.tol_scale.is_finite()) {
        eprintln!("error: --tol-scale must be positive");
        return ExitCode::from(2);
    }
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if args.exact && scenario.space.dim() > 3 {
        eprintln!("error: --exact needs n ≤ 3");
        return ExitCode::from(2);
    }
    let opts = RunOptions { seed: args.seed, tol_scale: args.tol_scale, exact: args.exact, jobs: args.jobs };
    match run_suite(&scenario, args.out.as_deref(), &opts) {
        Ok(result) => {
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", result.summary);
            ExitCode::from(result.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
