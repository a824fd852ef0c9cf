//! Output files: buffered writers and the per-run JSON manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Creates `dir/name` (and `dir`) for buffered writing.
pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Everything needed to reproduce a run. Only `started_unix` and
/// `wall_clock_seconds` change between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub notes: Vec<String>,
}

/// Tracks wall-clock time and output files of one run.
pub struct RunRecord {
    command: String,
    config: serde_json::Value,
    master_seed: u64,
    outputs: Vec<String>,
    notes: Vec<String>,
    started: Instant,
    started_unix: u64,
}

impl RunRecord {
    pub fn start(command: &str, config: &impl Serialize, master_seed: u64) -> Result<Self> {
        Ok(RunRecord {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            master_seed,
            outputs: Vec::new(),
            notes: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let m = Manifest {
            tool: "epilattice",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: self.config,
            master_seed: self.master_seed,
            outputs: self.outputs,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            notes: self.notes,
        };
        let path = dir.join(MANIFEST_NAME);
        let w = create(dir, MANIFEST_NAME)?;
        serde_json::to_writer_pretty(w, &m)?;
        Ok(path)
    }
}
