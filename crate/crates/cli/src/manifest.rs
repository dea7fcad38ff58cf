//! Run manifests: what a command read, with digests, and what it wrote.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: u64,
    pub budget: usize,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub wall_time_ms: u128,
}

/// Reads inputs while recording their digests, and collects output paths.
#[derive(Debug)]
pub struct Run {
    subcommand: String,
    seed: u64,
    budget: usize,
    started: Instant,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
}

impl Run {
    pub fn new(subcommand: &str, seed: u64, budget: usize) -> Self {
        Run {
            subcommand: subcommand.to_string(),
            seed,
            budget,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let path = path.display().to_string();
        if !self.inputs.iter().any(|i| i.path == path) {
            self.inputs.push(InputDigest { path, sha256: hex::encode(Sha256::digest(text.as_bytes())) });
        }
        Ok(text)
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    pub fn has_outputs(&self) -> bool {
        !self.outputs.is_empty()
    }

    /// Writes the manifest to `path` when anything was written.
    pub fn finish(self, path: &Path) -> Result<Option<PathBuf>> {
        if self.outputs.is_empty() {
            return Ok(None);
        }
        let manifest = RunManifest {
            subcommand: self.subcommand,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            budget: self.budget,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_time_ms: self.started.elapsed().as_millis(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(Some(path.to_path_buf()))
    }
}

/// Manifest path for a single output file: `<file>.manifest.json`.
pub fn manifest_beside(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}
