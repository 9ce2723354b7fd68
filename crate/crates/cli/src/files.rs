use std::fs;
use std::io::Write;
use std::path::Path;

use pacu_core::io::{instance_from_json, schedule_from_json};
use pacu_core::model::{Instance, Schedule};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn in_file(path: &Path, err: pacu_core::Error) -> CliError {
    match CliError::from(err) {
        CliError::Invalid(msg) => CliError::Invalid(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    instance_from_json(&read_text(path)?).map_err(|e| in_file(path, e))
}

pub fn load_schedule(path: &Path, instance: &Instance) -> CliResult<Schedule> {
    schedule_from_json(instance, &read_text(path)?).map_err(|e| in_file(path, e))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(path) => fs::write(path, content).map_err(|e| CliError::write_failed(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
