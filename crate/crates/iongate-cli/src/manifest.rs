//! Run manifest: enough metadata to re-run a command and check its inputs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the raw config bytes (inputs concatenated in command
    /// argument order) — stable across machines for identical files.
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    /// Files written by the command, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config_bytes: &[&[u8]], seed: u64) -> Self {
        let mut hasher = Sha256::new();
        for chunk in config_bytes {
            hasher.update(chunk);
        }
        Self {
            command: command.into(),
            config_digest: format!("sha256:{:x}", hasher.finalize()),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    /// Write a file into `out_dir`, recording it in the manifest.
    pub fn write_output(
        &mut self,
        out_dir: &Path,
        name: &str,
        contents: &str,
    ) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    /// Serialize and write the manifest itself.
    pub fn finalize(mut self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        self.outputs.push("run_manifest.json".to_string());
        let path = out_dir.join("run_manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&self)?)?;
        Ok(path)
    }
}
