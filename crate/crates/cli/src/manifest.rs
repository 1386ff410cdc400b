use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use h2_storage::GridResolution;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Provenance record written next to the outputs of every command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub tool_version: String,
    pub config_paths: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<GridResolution>,
    pub threads: usize,
    pub duration_secs: f64,
    pub outputs: Vec<OutputDigest>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_paths: Vec::new(),
            seed: None,
            grid: None,
            threads: rayon::current_num_threads(),
            duration_secs: 0.0,
            outputs: Vec::new(),
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, path: Option<&Path>) {
        if let Some(p) = path {
            self.config_paths.push(p.to_path_buf());
        }
    }

    /// Writes `bytes` to `dir/name` and records its digest.
    pub fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputDigest {
            file: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn finish(mut self, dir: &Path) -> Result<()> {
        if let Some(t) = self.started {
            self.duration_secs = t.elapsed().as_secs_f64();
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
