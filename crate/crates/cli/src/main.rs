use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrdyn_cli::report::{to_json, write_outputs};
use corrdyn_cli::run::{error_summary, run, Mode, RunOptions};
use corrdyn_cli::scenario::load_scenario;

/// Evolve correlation operators of finite quantum systems from a JSON scenario.
#[derive(Debug, Parser)]
#[command(name = "corrdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the requested outputs over the time grid.
    Run(Common),
    /// Run invariant checks only.
    Check(Common),
    /// Evaluate outputs and compare against direct propagation of the densities.
    Oracle(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Tolerance replacing the oracle, finite-difference and algebraic ones.
    #[arg(long, value_parser = positive_float)]
    tol: Option<f64>,
    /// Particle cutoff replacing the scenario's.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    cutoff: Option<u64>,
    /// Directory for report.json, timing.json and CSV series; the report goes to stdout otherwise.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Suppress the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

fn positive_float(text: &str) -> Result<f64, String> {
    match text.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("expected a positive number, got {text:?}")),
    }
}

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Run(a) => (Mode::Run, a),
        Command::Check(a) => (Mode::Check, a),
        Command::Oracle(a) => (Mode::Oracle, a),
    };
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let options = RunOptions { tol: args.tol, cutoff: args.cutoff.map(|n| n as usize) };
    let (report, timing) = match run(&scenario, mode, &options) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };

    match &args.output {
        Some(dir) => {
            if let Err(e) = write_outputs(dir, &report, &timing) {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_INPUT);
            }
        }
        None => println!("{}", to_json(&report)),
    }

    if !args.quiet {
        for warning in &report.warnings {
            eprintln!("warning: {warning}");
        }
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
        eprintln!(
            "{} time points, {} checks, {} failed, {:.3} s",
            report.times.len(),
            report.checks.len(),
            failed.len(),
            timing.total_seconds
        );
        for check in failed {
            let at = check.t.map(|t| format!(" at t = {t}")).unwrap_or_default();
            eprintln!("  {}{at}: residual {:e} > {:e}", check.name, check.residual, check.tolerance);
        }
        for (output, count) in error_summary(&report) {
            eprintln!("  {output}: failed at {count} time points");
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECKS_FAILED)
    }
}
