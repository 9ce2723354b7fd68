use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pacu_core::forecast::DEFAULT_GRID_STEP;
use pacu_core::model::Instance;
use pacu_core::solver::{simulated_annealing, SAConfig};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::files::{emit, load_instance, to_json};
use crate::manifest::RunManifest;
use crate::optimize::best_index;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of instance files (`*.json`).
    instances: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,3000")]
    iterations: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.85,0.90,0.95")]
    cooling_factors: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    cooling_periods: Vec<usize>,
    /// Seeded repetitions per instance and cell; repetition `i` uses `seed + i`.
    #[arg(long, default_value_t = 10)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    initial_temperature: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    /// Results JSON; the table goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Cell {
    iterations: usize,
    cooling_factor: f64,
    cooling_period: usize,
    /// Per repetition, best objective summed over instances.
    rep_totals: Vec<f64>,
    mean_total_best_meo: f64,
    best: bool,
}

#[derive(Debug, Serialize)]
struct Results {
    instances: Vec<PathBuf>,
    reps: u64,
    seed: u64,
    cells: Vec<Cell>,
}

fn instance_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Invalid(e.to_string()))?.path();
        let is_json = path.extension().is_some_and(|x| x == "json");
        let is_manifest = path.to_string_lossy().ends_with(".manifest.json");
        if path.is_file() && is_json && !is_manifest {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Invalid(format!(
            "no instance files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

pub fn run(args: Args) -> CliResult<RunManifest> {
    if args.reps < 1 {
        return Err(CliError::Invalid("--reps must be >= 1".into()));
    }
    let paths = instance_files(&args.instances)?;
    let instances: Vec<Instance> = paths
        .iter()
        .map(|p| load_instance(p))
        .collect::<CliResult<_>>()?;

    let mut configs = Vec::new();
    for &iterations in &args.iterations {
        for &cooling_factor in &args.cooling_factors {
            for &cooling_period in &args.cooling_periods {
                let config = SAConfig {
                    iterations,
                    initial_temperature: args.initial_temperature,
                    cooling_factor,
                    cooling_period,
                    grid_step: args.grid_step,
                    seed: args.seed,
                };
                config.validate()?;
                configs.push(config);
            }
        }
    }

    let reps = args.reps as usize;
    let n = instances.len();
    let jobs: Vec<(usize, u64, usize)> = (0..configs.len())
        .flat_map(|c| (0..args.reps).flat_map(move |r| (0..n).map(move |i| (c, r, i))))
        .collect();
    let best: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, r, i)| {
            let config = SAConfig {
                seed: args.seed.wrapping_add(r),
                ..configs[c]
            };
            simulated_annealing(&instances[i], &config).map(|report| report.best_meo)
        })
        .collect::<Result<_, _>>()?;

    let mut cells: Vec<Cell> = configs
        .iter()
        .enumerate()
        .map(|(c, config)| {
            let rep_totals: Vec<f64> = (0..reps)
                .map(|r| {
                    best[(c * reps + r) * n..(c * reps + r + 1) * n]
                        .iter()
                        .sum()
                })
                .collect();
            Cell {
                iterations: config.iterations,
                cooling_factor: config.cooling_factor,
                cooling_period: config.cooling_period,
                mean_total_best_meo: rep_totals.iter().sum::<f64>() / reps as f64,
                rep_totals,
                best: false,
            }
        })
        .collect();
    let winner = best_index(cells.iter().map(|c| c.mean_total_best_meo));
    cells[winner].best = true;

    let mut table = String::from("iterations  factor  period  mean_total_best_meo\n");
    for cell in &cells {
        let _ = writeln!(
            table,
            "{:>10}  {:>6.2}  {:>6}  {:>19.4}{}",
            cell.iterations,
            cell.cooling_factor,
            cell.cooling_period,
            cell.mean_total_best_meo,
            if cell.best { "  *" } else { "" }
        );
    }
    emit(None, &table)?;
    let results = Results {
        instances: paths.clone(),
        reps: args.reps,
        seed: args.seed,
        cells,
    };
    if let Some(out) = &args.out {
        emit(Some(out), &to_json(&results)?)?;
    }

    let mut manifest = RunManifest::new(
        "sweep",
        Some(args.seed),
        json!({
            "iterations": args.iterations,
            "cooling_factors": args.cooling_factors,
            "cooling_periods": args.cooling_periods,
            "reps": args.reps,
            "initial_temperature": args.initial_temperature,
            "grid_step": args.grid_step,
        }),
    );
    for path in &paths {
        manifest = manifest.input(path);
    }
    Ok(manifest.output(args.out.as_deref()))
}
