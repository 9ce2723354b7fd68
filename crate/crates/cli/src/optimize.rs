use std::fs;
use std::path::PathBuf;

use pacu_core::forecast::DEFAULT_GRID_STEP;
use pacu_core::io::schedule_to_json;
use pacu_core::model::meo;
use pacu_core::solver::{
    baseline_schedule, simulated_annealing, IterationRecord, SAConfig, SolveReport,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::files::{emit, load_instance, to_json};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 2500)]
    iterations: usize,
    #[arg(long, default_value_t = 0.95)]
    cooling_factor: f64,
    /// Iterations between temperature drops.
    #[arg(long, default_value_t = 200)]
    cooling_period: usize,
    #[arg(long, default_value_t = 1.0)]
    initial_temperature: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent runs seeded `seed`, `seed + 1`, ...; the best one wins.
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    /// Schedule file to write; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON with objective values and the annealing trace.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write every replica's schedule into this directory.
    #[arg(long)]
    replica_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Report {
    config: SAConfig,
    replica_seeds: Vec<u64>,
    replica_best_meo: Vec<f64>,
    best_replica: usize,
    baseline_meo: f64,
    initial_meo: f64,
    best_meo: f64,
    reduction_vs_baseline_pct: f64,
    accepted: usize,
    rejected: usize,
    best_sequence: Vec<String>,
    trace: Vec<IterationRecord>,
}

/// Index of the lowest objective; the earliest wins ties.
pub fn best_index(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn run(args: Args) -> CliResult<RunManifest> {
    if args.replicas < 1 {
        return Err(CliError::Invalid("--replicas must be >= 1".into()));
    }
    let instance = load_instance(&args.instance)?;
    let base = SAConfig {
        iterations: args.iterations,
        initial_temperature: args.initial_temperature,
        cooling_factor: args.cooling_factor,
        cooling_period: args.cooling_period,
        grid_step: args.grid_step,
        seed: args.seed,
    };
    base.validate()?;

    let seeds: Vec<u64> = (0..args.replicas)
        .map(|i| args.seed.wrapping_add(i))
        .collect();
    let runs: Vec<SolveReport> = seeds
        .par_iter()
        .map(|&seed| simulated_annealing(&instance, &SAConfig { seed, ..base }))
        .collect::<Result<_, _>>()?;
    let winner = best_index(runs.iter().map(|r| r.best_meo));
    let best = &runs[winner];

    if let Some(dir) = &args.replica_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::write_failed(dir, e))?;
        for (run, seed) in runs.iter().zip(&seeds) {
            let path = dir.join(format!("replica-{seed}.json"));
            emit(
                Some(&path),
                &schedule_to_json(&instance, &run.best_schedule)?,
            )?;
        }
    }

    let baseline_meo = meo(&instance, &baseline_schedule(&instance), args.grid_step)?;
    let reduction = if baseline_meo > 0.0 {
        100.0 * (baseline_meo - best.best_meo) / baseline_meo
    } else {
        0.0
    };
    emit(
        args.out.as_deref(),
        &schedule_to_json(&instance, &best.best_schedule)?,
    )?;
    if let Some(path) = &args.report {
        let report = Report {
            config: best.config,
            replica_seeds: seeds.clone(),
            replica_best_meo: runs.iter().map(|r| r.best_meo).collect(),
            best_replica: winner,
            baseline_meo,
            initial_meo: best.initial_meo,
            best_meo: best.best_meo,
            reduction_vs_baseline_pct: reduction,
            accepted: best.accepted,
            rejected: best.rejected,
            best_sequence: best.best_sequence.ids(&instance),
            trace: best.trace.clone(),
        };
        emit(Some(path), &to_json(&report)?)?;
    }
    eprintln!(
        "best MEO {:.4} (initial {:.4}, baseline {:.4}, {:.1}% below baseline) from seed {}",
        best.best_meo, best.initial_meo, baseline_meo, reduction, seeds[winner]
    );

    let mut manifest = RunManifest::new(
        "optimize",
        Some(args.seed),
        json!({ "sa": base, "replicas": args.replicas }),
    )
    .input(&args.instance)
    .output(args.out.as_deref())
    .output(args.report.as_deref());
    if let Some(dir) = &args.replica_dir {
        manifest = manifest.output(Some(dir));
    }
    Ok(manifest)
}
