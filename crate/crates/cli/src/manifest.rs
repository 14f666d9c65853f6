//! Run manifests: everything needed to reproduce a run (resolved config,
//! seed, input fingerprints, tool version). Written as `manifest.json` next
//! to the run outputs; content is deterministic for identical runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use arglab_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ResolvedRun;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub config_path: Option<PathBuf>,
    pub config_sha256: Option<String>,
    pub resolved: ResolvedRun,
    /// Input path -> sha256 of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            tool: "arglab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: None,
            config_path: None,
            config_sha256: None,
            resolved: ResolvedRun::default(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_config(mut self, path: Option<&Path>) -> Result<Self> {
        if let Some(path) = path {
            self.config_path = Some(path.to_path_buf());
            self.config_sha256 = Some(sha256_file(path)?);
        }
        Ok(self)
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Fingerprint every regular file under a directory (sorted order).
    pub fn add_input_dir(&mut self, dir: &Path) -> Result<()> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mut hasher = Sha256::new();
        for file in &files {
            hasher.update(file.file_name().unwrap_or_default().as_encoded_bytes());
            hasher.update(std::fs::read(file).map_err(|e| Error::io(file, e))?);
        }
        self.inputs.insert(
            format!("{}/", dir.display()),
            hex(&hasher.finalize()),
        );
        Ok(())
    }

    pub fn add_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Validation(format!("serializing manifest: {e}")))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&data)))
}
