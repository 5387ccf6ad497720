//! Run manifest: a JSON record of what produced a set of artifacts.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Snapshot of a pipeline run: configuration, seeds, input/output digests,
/// and per-stage wall-clock timings. Timestamps live only here, so the data
/// artifacts themselves stay byte-identical across reruns.
#[derive(Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    /// The physical configuration in its key=value file form.
    pub config: String,
    pub parameters: BTreeMap<String, String>,
    pub input_digests: BTreeMap<String, String>,
    pub output_digests: BTreeMap<String, String>,
    pub stage_timings: Vec<StageTiming>,
    pub metrics: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(seed: u64, config: String) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            parameters: BTreeMap::new(),
            input_digests: BTreeMap::new(),
            output_digests: BTreeMap::new(),
            stage_timings: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.output_digests
            .insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn time_stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        eprintln!("[pipeline] {name} ...");
        let start = Instant::now();
        let out = f()?;
        let seconds = start.elapsed().as_secs_f64();
        eprintln!("[pipeline] {name} done in {seconds:.2}s");
        self.stage_timings.push(StageTiming {
            stage: name.to_string(),
            seconds,
        });
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}
