use std::path::PathBuf;

use pacu_core::forecast::{occupancy_curve, DEFAULT_GRID_STEP};
use pacu_core::io::curve_to_csv;
use serde_json::json;

use crate::error::CliResult;
use crate::files::{emit, load_instance, load_schedule};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    /// Grid spacing in hours.
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    /// CSV file to write; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> CliResult<RunManifest> {
    let instance = load_instance(&args.instance)?;
    let schedule = load_schedule(&args.schedule, &instance)?;
    let curve = occupancy_curve(
        instance.patients(),
        &schedule.starts,
        args.grid_step,
        instance.day_hours(),
    )?;
    emit(args.out.as_deref(), &curve_to_csv(&curve))?;
    eprintln!("maximum expected occupancy {:.4}", curve.max_mean());

    Ok(
        RunManifest::new("forecast", None, json!({ "grid_step": args.grid_step }))
            .input(&args.instance)
            .input(&args.schedule)
            .output(args.out.as_deref()),
    )
}
