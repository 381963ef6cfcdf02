//! Run manifests: written before any long computation, with enough
//! resolved state to reproduce the run.

use cavp_core::util::fnv1a64;
use cavp_core::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fully resolved configuration after precedence was applied.
    pub config: serde_json::Value,
    /// Input file digests (fnv1a-64 over raw bytes).
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            input_digests: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.input_digests.insert(
            path.display().to_string(),
            format!("{:016x}", fnv1a64(&bytes)),
        );
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Manifest location for a directory-producing command.
pub fn dir_manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.json")
}

/// Manifest location for a file-producing command.
pub fn file_manifest_path(out_file: &Path) -> PathBuf {
    let mut name = out_file
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    name.push_str(".manifest.json");
    out_file.with_file_name(name)
}
