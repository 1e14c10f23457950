//! Run manifest: the resolved parameters and output files of a command,
//! enough to reproduce a run bit-identically (modulo the timestamps).

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Path of the offspring p.g.f. input.
    pub pgf: String,
    /// Every resolved parameter of the run, including defaults.
    pub params: Value,
    /// Output files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub struct ManifestBuilder {
    command: String,
    pgf: String,
    params: Value,
    outputs: Vec<PathBuf>,
    started_unix: u64,
}

impl ManifestBuilder {
    pub fn new(command: &str, pgf: &Path, params: Value) -> Self {
        Self {
            command: command.to_string(),
            pgf: pgf.display().to_string(),
            params,
            outputs: Vec::new(),
            started_unix: now_unix(),
        }
    }

    pub fn add_output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    /// Writes `manifest.json` into the output directory (and lists it
    /// among the outputs).
    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.outputs.push(dir.join("manifest.json"));
        let manifest = RunManifest {
            command: self.command,
            pgf: self.pgf,
            params: self.params,
            outputs: self
                .outputs
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string())
                })
                .collect(),
            started_unix: self.started_unix,
            finished_unix: now_unix(),
        };
        crate::output::write_json(dir, "manifest.json", &manifest)?;
        Ok(())
    }
}
