//! Artifact writing and manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

/// Collects the artifacts of one command and writes its manifest last.
pub struct Output {
    dir: PathBuf,
    command: &'static str,
    hash: String,
    artifacts: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, command: &'static str, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command, hash, artifacts: vec![] })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn manifest_name(command: &str) -> String {
        format!("{command}_manifest.json")
    }

    /// Writes `<command>_manifest.json` with the config hash, artifact list,
    /// status and command-specific result.
    pub fn finish(self, seed: u64, qualitative: Option<bool>, status: &str, result: impl Serialize) -> Result<PathBuf, CliError> {
        let result = serde_json::to_value(result).map_err(|e| CliError::Config(e.to_string()))?;
        let mut m = json!({
            "command": self.command,
            "config_hash": self.hash,
            "seed": seed,
            "status": status,
            "artifacts": self.artifacts,
            "result": result,
        });
        if let Some(q) = qualitative {
            m["qualitative_mode"] = Value::Bool(q);
        }
        let path = self.dir.join(Self::manifest_name(self.command));
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// `{:.16e}` fields joined by commas.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
}
