use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;
use crate::files::{emit, to_json};

/// Record of one invocation: enough to re-run it and get the same outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: Option<u64>, config: Value) -> Self {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_secs: 0.0,
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(mut self, path: Option<&Path>) -> Self {
        self.outputs.extend(path.map(Path::to_path_buf));
        self
    }

    /// Writes to `explicit`, else next to the first output as
    /// `<output>.manifest.json`, else to stderr.
    pub fn write(mut self, explicit: Option<&Path>, elapsed: Duration) -> CliResult<()> {
        self.duration_secs = elapsed.as_secs_f64();
        let json = to_json(&self)?;
        let target = explicit.map(Path::to_path_buf).or_else(|| {
            self.outputs.first().map(|out| {
                let mut name = out.as_os_str().to_owned();
                name.push(".manifest.json");
                PathBuf::from(name)
            })
        });
        match target {
            Some(path) => emit(Some(&path), &json),
            None => {
                eprint!("{json}");
                Ok(())
            }
        }
    }
}
