//! `pacu`: generate surgical days, forecast recovery-unit occupancy, and
//! sequence surgeries to flatten the occupancy peak.

mod error;
mod files;
mod forecast;
mod generate;
mod manifest;
mod optimize;
mod sweep;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::CliResult;
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "pacu",
    version,
    about = "Recovery-unit occupancy forecasting and surgery sequencing"
)]
struct Cli {
    /// Where to write the run manifest. Defaults to `<out>.manifest.json`
    /// when the command has an output file, otherwise stderr.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic instance.
    Generate(generate::Args),
    /// Write the expected occupancy curve of a schedule as CSV.
    Forecast(forecast::Args),
    /// Sequence surgeries with simulated annealing.
    Optimize(optimize::Args),
    /// Compare the analytic forecast with Monte Carlo samples.
    Validate(validate::Args),
    /// Grid-search annealing parameters over a directory of instances.
    Sweep(sweep::Args),
}

fn run(cli: Cli) -> CliResult<()> {
    let clock = Instant::now();
    let manifest: RunManifest = match cli.command {
        Command::Generate(args) => generate::run(args)?,
        Command::Forecast(args) => forecast::run(args)?,
        Command::Optimize(args) => optimize::run(args)?,
        Command::Validate(args) => validate::run(args)?,
        Command::Sweep(args) => sweep::run(args)?,
    };
    manifest.write(cli.manifest.as_deref(), clock.elapsed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
