//! Run manifests: enough provenance to reproduce every artifact bit for bit.

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_path: Option<PathBuf>,
    /// SHA-256 of the config file bytes (of the empty string for defaults).
    pub config_sha256: String,
    pub threads: Option<usize>,
    pub oracle: bool,
    pub outputs: Vec<PathBuf>,
    pub created_unix: u64,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_path: Option<&Path>) -> Result<Manifest> {
        let bytes = match config_path {
            Some(p) => std::fs::read(p)?,
            None => Vec::new(),
        };
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        Ok(Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_path: config_path.map(Path::to_path_buf),
            config_sha256: format!("{:x}", hasher.finalize()),
            threads: None,
            oracle: false,
            outputs: Vec::new(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let file = std::fs::File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}
