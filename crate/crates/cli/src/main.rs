//! Batch scenario runner for the expanding-gas laboratory.
//!
//! `expanse run <config>` executes one scenario described by a flat
//! `[section] key = value` file and writes CSV series, a JSON-lines summary
//! and a pass/fail check table into the output directory.
//! `expanse report <run-dir>` renders those artifacts as a readable summary.
//!
//! Outputs are byte-identical for identical configs: everything runs
//! single-threaded with fixed summation orders, and `--threads` is accepted
//! only for interface compatibility.

mod config;
mod report;
mod scenarios;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "expanse", version, about = "Expanding free-boundary gas laboratory")]
struct Cli {
    /// Worker thread count (accepted for compatibility; results never
    /// depend on it — the run is deterministic and single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the scenario described by a config file.
    Run {
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the artifacts of a completed run directory.
    Report { run_dir: PathBuf },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECKS: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match RunConfig::load(&config, out.as_deref()) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match scenarios::run(&cfg) {
                Ok(outcome) => {
                    println!("{}", outcome.render_checks());
                    if outcome.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_CHECKS)
                    }
                }
                Err(scenarios::RunError::Io(msg)) => {
                    eprintln!("io error: {msg}");
                    ExitCode::from(EXIT_CONFIG)
                }
                Err(scenarios::RunError::Numerical(e)) => {
                    eprintln!("numerical abort: {e}");
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
        }
        Command::Report { run_dir } => match report::render(&run_dir) {
            Ok(text) => {
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
