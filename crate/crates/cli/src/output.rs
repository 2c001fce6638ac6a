use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

/// Writes run artifacts into one directory and finishes with `run.json`.
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
    started: Instant,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.entries.push(OutputEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Argument(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn finish(
        self,
        subcommand: &str,
        params: &Map<String, Value>,
        seed: Option<u64>,
        config: Option<&Path>,
        summary: Value,
    ) -> CliResult<()> {
        let manifest = json!({
            "subcommand": subcommand,
            "params": params,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config.map(|p| p.display().to_string()),
            "output_dir": self.root.display().to_string(),
            "outputs": self.entries,
            "summary": summary,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
        });
        let path = self.root.join("run.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Argument(e.to_string()))? + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
