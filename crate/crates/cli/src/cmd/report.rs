use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use monlab_core::derived::DerivedReport;
use monlab_core::dist::{predict_timeliness, select_model, Family};
use monlab_core::io::read_trace;
use monlab_core::metrics::quality_summary;
use monlab_harness::store::{read_run, RUN_FILE};

use crate::cmd::derive::DERIVED_FILE;
use crate::cmd::simulate::{SimOutput, SUMMARY_FILE, TRACE_FILE};
use crate::error::{CliError, Result};
use crate::manifest::{Command, RunManifest};
use crate::output::{content_id, output_dir, write_file, DatFile};

pub const SCALABILITY_DAT: &str = "scalability.dat";
pub const IMPACT_DAT: &str = "impact.dat";
pub const TIMELINESS_DAT: &str = "timeliness.dat";
pub const DISTORTION_DAT: &str = "distortion.dat";
pub const SUMMARY_MD: &str = "summary.md";

enum Input {
    Derived(DerivedReport),
    Run(Box<monlab_harness::RunRecord>),
    Sim(SimOutput, Vec<[f64; 4]>),
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn classify(dir: &Path) -> Result<Input> {
    let bad = |e: &dyn std::fmt::Display| CliError::Usage(format!("{}: {e}", dir.display()));
    if dir.join(DERIVED_FILE).is_file() {
        let r: DerivedReport =
            serde_json::from_reader(open(&dir.join(DERIVED_FILE))?).map_err(|e| bad(&e))?;
        Ok(Input::Derived(r))
    } else if dir.join(RUN_FILE).is_file() {
        Ok(Input::Run(Box::new(read_run(dir).map_err(|e| bad(&e))?)))
    } else if dir.join(SUMMARY_FILE).is_file() && dir.join(TRACE_FILE).is_file() {
        let s: SimOutput =
            serde_json::from_reader(open(&dir.join(SUMMARY_FILE))?).map_err(|e| bad(&e))?;
        let rows = read_trace(open(&dir.join(TRACE_FILE))?).map_err(|e| bad(&e))?;
        Ok(Input::Sim(s, rows))
    } else {
        Err(CliError::Usage(format!(
            "{} is not a run, derive or simulate output directory",
            dir.display()
        )))
    }
}

struct Timeliness {
    k: f64,
    tolerance: f64,
    predicted: f64,
    measured: f64,
    family: Family,
}

/// Model-predicted vs measured timeliness of a run. The prediction fits the
/// ok delays and scales by the ok fraction, since failures are never timely.
fn timeliness(run: &monlab_harness::RunRecord) -> Result<Option<Timeliness>> {
    let series = &run.monitoring_series;
    if series.samples.is_empty() {
        return Ok(None);
    }
    let tau = run.plan.delay_tolerance;
    let ok: Vec<f64> = series
        .samples
        .iter()
        .filter(|s| s.is_ok())
        .filter_map(|s| s.delay)
        .collect();
    let fit = match select_model(&ok, &Family::ALL) {
        Ok(f) => f,
        Err(_) => return Ok(None),
    };
    let ok_fraction = ok.len() as f64 / series.samples.len() as f64;
    Ok(Some(Timeliness {
        k: series.factor_value,
        tolerance: tau,
        predicted: ok_fraction * predict_timeliness(&fit.spec, tau)?,
        measured: quality_summary(series, tau)?.timeliness,
        family: fit.spec.family(),
    }))
}

pub fn run(dirs: &[PathBuf], out: Option<&Path>) -> Result<PathBuf> {
    if dirs.is_empty() {
        return Err(CliError::Usage("report needs at least one input directory".into()));
    }
    let inputs = dirs.iter().map(|d| classify(d)).collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
    let id = content_id("report", &[names.join("\n").as_bytes()]);
    let dir = output_dir(out, &id);
    let mut manifest = RunManifest::begin(&id, Command::Report, dirs.to_vec());

    let mut scal = DatFile::new("scalability degree against the baseline", &["k1", "k2", "psi"]);
    let mut imp = DatFile::new(
        "management impact against the baseline",
        &["k0", "k", "mim", "out_of_range"],
    );
    let mut time = DatFile::new(
        "timeliness at the delay tolerance, fitted model vs measured",
        &["k", "tolerance_s", "predicted", "measured"],
    );
    let mut dist = DatFile::new(
        "distortion traces, one block per simulation",
        &["t", "real", "observed", "error"],
    );
    let mut md = String::from("# Report\n");
    let mut derived_md = String::new();
    let mut runs_md = String::new();
    let mut sims_md = String::new();

    for (name, input) in names.iter().zip(&inputs) {
        match input {
            Input::Derived(r) => {
                for s in &r.scalability {
                    scal.row(&[s.k1, s.k2, s.psi]);
                }
                for m in &r.impact {
                    imp.row(&[m.k0, m.k, m.mim, f64::from(u8::from(m.out_of_range))]);
                }
                let _ = writeln!(derived_md, "\n### {} ({})\n", r.run_id, r.factor_name);
                derived_md.push_str("| k | G | psi |\n|---|---|---|\n");
                for (p, s) in r.points.iter().zip(&r.scalability) {
                    let _ = writeln!(derived_md, "| {} | {:.6} | {:.6} |", p.k, p.g, s.psi);
                }
                if !r.impact.is_empty() {
                    derived_md.push_str("\n| k | E | mim | out of range |\n|---|---|---|---|\n");
                    for (p, m) in r.productivity.iter().zip(&r.impact) {
                        let _ = writeln!(
                            derived_md,
                            "| {} | {:.6} | {:.6} | {} |",
                            m.k, p.e, m.mim, m.out_of_range
                        );
                    }
                }
            }
            Input::Run(run) => match timeliness(run)? {
                Some(t) => {
                    time.row(&[t.k, t.tolerance, t.predicted, t.measured]);
                    let _ = writeln!(
                        runs_md,
                        "| {} | {} | {} | {} | {:.6} | {:.6} |",
                        run.run_id, t.k, t.tolerance, t.family, t.predicted, t.measured
                    );
                }
                None => {
                    let _ = writeln!(
                        runs_md,
                        "| {} | {} | {} | too few ok delays | | |",
                        run.run_id, run.monitoring_series.factor_value, run.plan.delay_tolerance
                    );
                }
            },
            Input::Sim(s, rows) => {
                dist.block();
                for r in rows {
                    dist.row(r);
                }
                let _ = writeln!(
                    sims_md,
                    "| {name} | {} | {} | {:.6} | {:.6} | {:.6} |",
                    s.plan.agent_count,
                    s.points,
                    s.summary.rmse,
                    s.summary.mean_abs_rel_error,
                    s.summary.max_staleness_s
                );
            }
        }
    }

    if !derived_md.is_empty() {
        md.push_str("\n## Derived metrics\n");
        md.push_str(&derived_md);
    }
    if !runs_md.is_empty() {
        md.push_str("\n## Timeliness\n\n| run | k | tolerance (s) | model | predicted | measured |\n|---|---|---|---|---|---|\n");
        md.push_str(&runs_md);
    }
    if !sims_md.is_empty() {
        md.push_str("\n## Distortion\n\n| input | agents | points | rmse | mean abs rel error | max staleness (s) |\n|---|---|---|---|---|---|\n");
        md.push_str(&sims_md);
    }

    let mut outputs = Vec::new();
    for (file, dat) in [
        (SCALABILITY_DAT, &scal),
        (IMPACT_DAT, &imp),
        (TIMELINESS_DAT, &time),
        (DISTORTION_DAT, &dist),
    ] {
        let path = dir.join(file);
        dat.write(&path)?;
        outputs.push(path);
    }
    let path = dir.join(SUMMARY_MD);
    write_file(&path, md)?;
    outputs.push(path);
    manifest.outputs = outputs;
    manifest.commit(&dir)?;
    Ok(dir)
}
