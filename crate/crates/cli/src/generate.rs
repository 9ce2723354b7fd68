use std::path::PathBuf;

use pacu_core::io::instance_to_json;
use pacu_core::simulation::{generate_seeded, GenSpec};
use serde_json::json;

use crate::error::CliResult;
use crate::files::{emit, read_text};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// JSON generator spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    patients: Option<usize>,
    #[arg(long)]
    surgeons: Option<usize>,
    #[arg(long)]
    ors: Option<u32>,
    /// Share of patients who need a recovery bed.
    #[arg(long)]
    recovery_fraction: Option<f64>,
    /// Hours the ORs are open.
    #[arg(long)]
    or_open_hours: Option<f64>,
    #[arg(long)]
    day_hours: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Instance file to write; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> CliResult<RunManifest> {
    let mut spec = match &args.spec {
        Some(path) => serde_json::from_str::<GenSpec>(&read_text(path)?)
            .map_err(|e| crate::error::CliError::Invalid(format!("{}: {e}", path.display())))?,
        None => GenSpec::default(),
    };
    if let Some(v) = args.patients {
        spec.patient_count = v;
    }
    if let Some(v) = args.surgeons {
        spec.surgeon_count = v;
    }
    if let Some(v) = args.ors {
        spec.or_count = v;
    }
    if let Some(v) = args.recovery_fraction {
        spec.recovery_fraction = v;
    }
    if let Some(v) = args.or_open_hours {
        spec.or_open_hours = v;
    }
    if let Some(v) = args.day_hours {
        spec.day_hours = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }

    let instance = generate_seeded(&spec)?;
    emit(args.out.as_deref(), &instance_to_json(&instance)?)?;
    eprintln!(
        "generated {} patients ({} need recovery), {} surgeons, {} ORs; ORs open {} h of a {} h day",
        instance.patients().len(),
        instance.recovery_count(),
        instance.surgeons().len(),
        instance.or_count(),
        instance.or_open_hours(),
        instance.day_hours(),
    );

    let mut manifest = RunManifest::new("generate", Some(spec.seed), json!({ "spec": spec }));
    if let Some(path) = &args.spec {
        manifest = manifest.input(path);
    }
    Ok(manifest.output(args.out.as_deref()))
}
