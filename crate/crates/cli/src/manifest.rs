//! The per-command manifest, written after every other output.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Bench,
    Fit,
    Derive,
    Simulate,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub tool_version: String,
    /// The outputs hold only part of the intended data.
    pub partial: bool,
    pub abort_reason: Option<String>,
}

impl RunManifest {
    pub fn begin(run_id: impl Into<String>, command: Command, inputs: Vec<PathBuf>) -> Self {
        let now = Utc::now();
        RunManifest {
            run_id: run_id.into(),
            command,
            inputs,
            outputs: Vec::new(),
            started: now,
            finished: now,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            partial: false,
            abort_reason: None,
        }
    }

    /// Stamps the finish time and writes `manifest.json` into `dir`.
    pub fn commit(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished = Utc::now();
        std::fs::create_dir_all(dir).map_err(CliError::runtime)?;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).map_err(CliError::runtime)?;
        std::fs::write(&path, text + "\n").map_err(CliError::runtime)?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(CliError::usage)?;
        serde_json::from_str(&text).map_err(CliError::usage)
    }
}
