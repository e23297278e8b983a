//! `calib-lab`: batch harness for the calibration toolkit.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
//! or configuration errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    /// Invalid input: exit 2.
    Config(String),
    /// A check ran and failed: exit 1.
    Check(String),
}

impl From<calib_lab_core::Error> for Failure {
    fn from(e: calib_lab_core::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "calib-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    #[command(flatten)]
    Run(RunConfig),
    /// Replay the configuration embedded in a JSON report.
    Rerun {
        report: PathBuf,
        /// Output path replacing the recorded one (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
struct RecordedReport {
    config: RunConfig,
}

fn recorded_config(report: &PathBuf, out: Option<PathBuf>) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(report)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", report.display())))?;
    let recorded: RecordedReport = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{} is not a report: {e}", report.display())))?;
    let mut config = recorded.config;
    match &mut config {
        RunConfig::Verify(c) => c.out = out,
        RunConfig::Area(c) => c.out = out,
        RunConfig::Flux(c) => c.out = out,
        RunConfig::Minimize(c) => c.out = out,
    }
    Ok(config)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("CALIB_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Config(format!(
                "CALIB_LAB_THREADS = {value:?} is not a positive integer"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Run(config) => commands::run(&config),
        Command::Rerun { report, out } => {
            recorded_config(&report, out).and_then(|config| commands::run(&config))
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
