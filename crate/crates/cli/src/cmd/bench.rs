use std::path::{Path, PathBuf};

use monlab_harness::bench::run_id;
use monlab_harness::store::write_run;
use monlab_harness::{run_bench, BenchPlan, HarnessError};

use crate::error::{CliError, Result};
use crate::manifest::{Command, RunManifest};
use crate::output::output_dir;

pub fn run(plan_file: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<PathBuf> {
    let text = std::fs::read_to_string(plan_file)
        .map_err(|e| CliError::Usage(format!("cannot read plan {}: {e}", plan_file.display())))?;
    let mut plan = BenchPlan::parse(&text)?;
    if let Some(s) = seed {
        plan.seed = s;
    }
    for w in plan.warnings() {
        eprintln!("warning: {w}");
    }
    let id = run_id(&plan);
    let dir = output_dir(out, &id);
    let mut manifest = RunManifest::begin(&id, Command::Bench, vec![plan_file.to_path_buf()]);

    let record = match run_bench(&plan) {
        Ok(r) => r,
        Err(e @ HarnessError::Plan(_)) => return Err(e.into()),
        Err(e) => {
            manifest.partial = true;
            manifest.abort_reason = Some(e.to_string());
            manifest.commit(&dir)?;
            return Err(CliError::Runtime(format!("run aborted: {e}")));
        }
    };
    manifest.outputs = write_run(&dir, &record)?;
    if let Some(why) = &record.aborted {
        manifest.partial = true;
        manifest.abort_reason = Some(why.clone());
        manifest.commit(&dir)?;
        return Err(CliError::Runtime(format!(
            "run aborted ({why}); partial data in {}",
            dir.display()
        )));
    }
    manifest.commit(&dir)?;
    Ok(dir)
}
