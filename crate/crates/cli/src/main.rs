//! holobeam: scenario runner for the RHS/ISAC toolkit.
//!
//! `holobeam run <scenario.json> [--seed N] [--out DIR]` executes a scenario
//! and writes its artifacts plus `manifest.json`; `holobeam validate
//! <scenario.json>` parses and checks without running. `HOLOBEAM_THREADS`
//! caps the worker count.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 infeasible
//! optimization, 4 IO or numeric failure.

mod export;
mod runner;
mod scenario;

use clap::{Parser, Subcommand};
use runner::{load_scenario, run_scenario, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "holobeam", version, about = "RHS/ISAC scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs.
    Run {
        scenario: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (defaults to the scenario's `output_dir`, then
        /// the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HOLOBEAM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(3)
        }
        Err(RunError::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(4)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
        } => {
            let (parsed, raw) = load_scenario(&scenario)?;
            let out_dir = out
                .or_else(|| parsed.output_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let manifest = run_scenario(&parsed, &raw, &out_dir, seed)?;
            println!(
                "{}: {} output(s) in {}",
                parsed.kind.name(),
                manifest.outputs.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Validate { scenario } => {
            let (parsed, _) = load_scenario(&scenario)?;
            println!("ok: {} scenario, seed {}", parsed.kind.name(), parsed.seed);
            Ok(())
        }
    }
}
