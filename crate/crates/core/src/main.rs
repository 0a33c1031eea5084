//! Command-line entry point: `mldrive run <config>` executes one scenario
//! described by a `key = value` config file and writes its artifacts.
//!
//! Exit codes: 0 on success, 2 for configuration problems (reported with
//! the offending line number), 3 for numerical failures during a run, 1
//! for anything else. The output directory is taken from `--output-dir`,
//! else the `MLDRIVE_OUTPUT_DIR` environment variable, else the config.

use clap::{Parser, Subcommand};
use mldrive::error::DriveError;
use mldrive::scenario::{parse_scenario, run_scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mldrive", about = "Multilevel SPWM motor-drive simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        /// Path to the scenario config.
        config: PathBuf,
        /// Write artifacts here instead of the configured directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the configured random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress the summary; errors still go to stderr.
        #[arg(long)]
        quiet: bool,
    },
}

fn run(cli: Cli) -> Result<(), DriveError> {
    let Command::Run { config, output_dir, seed, quiet } = cli.command;
    let text = std::fs::read_to_string(&config).map_err(|e| DriveError::Config {
        line: 0,
        message: format!("cannot read {}: {e}", config.display()),
    })?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(dir) = output_dir
        .or_else(|| std::env::var_os("MLDRIVE_OUTPUT_DIR").map(PathBuf::from))
    {
        scenario.output_dir = dir;
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
        scenario.training.seed = seed;
    }
    let report = run_scenario(&scenario)?;
    if !quiet {
        for line in &report.summary {
            println!("{line}");
        }
        println!(
            "wrote {} files to {}",
            report.files.len(),
            scenario.output_dir.display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
