use std::io::BufReader;
use std::path::{Path, PathBuf};

use monlab_core::dist::{fit_mle, select_model, FitReport};
use monlab_core::dist::Family;
use monlab_core::io::read_delays;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::manifest::{Command, RunManifest};
use crate::output::{content_id, output_dir, write_json};

pub const FIT_FILE: &str = "fit.json";

#[derive(Debug, Serialize)]
struct Candidate {
    family: Family,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<FitReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct FitOutput {
    selected: FitReport<f64>,
    candidates: Vec<Candidate>,
}

pub fn run(delays_file: &Path, families: &[Family], out: Option<&Path>) -> Result<PathBuf> {
    let raw = std::fs::read(delays_file)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", delays_file.display())))?;
    let delays = read_delays(BufReader::new(raw.as_slice()))?;
    let families: Vec<Family> = if families.is_empty() {
        Family::ALL.to_vec()
    } else {
        families.to_vec()
    };
    let names: Vec<&str> = families.iter().map(|f| f.as_str()).collect();
    let id = content_id("fit", &[&raw, names.join(",").as_bytes()]);
    let dir = output_dir(out, &id);
    let manifest = RunManifest::begin(&id, Command::Fit, vec![delays_file.to_path_buf()]);

    let selected = if families.len() == 1 {
        fit_mle(&delays, families[0])?
    } else {
        select_model(&delays, &families)?
    };
    let candidates = families
        .iter()
        .map(|&family| match fit_mle(&delays, family) {
            Ok(r) => Candidate {
                family,
                report: Some(r),
                error: None,
            },
            Err(e) => Candidate {
                family,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let path = dir.join(FIT_FILE);
    write_json(&path, &FitOutput { selected, candidates })?;
    let mut manifest = manifest;
    manifest.outputs = vec![path];
    manifest.commit(&dir)?;
    Ok(dir)
}
