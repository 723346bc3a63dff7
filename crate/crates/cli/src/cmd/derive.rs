use std::path::{Path, PathBuf};

use monlab_core::derived::{
    impact_curve, scalability_curve, DerivedReport, ImpactRow, PointRow, ProductivityRow,
    ScalabilityRow,
};
use monlab_harness::experiments::{monitoring_point, productivity_point};
use monlab_harness::store::read_run;
use monlab_harness::RunRecord;

use crate::error::{CliError, Result};
use crate::manifest::{Command, RunManifest};
use crate::output::{content_id, output_dir, write_json, DatFile};

pub const DERIVED_FILE: &str = "derived.json";
pub const EFFICIENCY_DAT: &str = "efficiency.dat";
pub const SCALABILITY_DAT: &str = "scalability.dat";
pub const IMPACT_DAT: &str = "impact.dat";

fn same_k(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn load_runs(dirs: &[PathBuf]) -> Result<Vec<RunRecord>> {
    if dirs.is_empty() {
        return Err(CliError::Usage("no run directories given".into()));
    }
    dirs.iter()
        .map(|d| {
            read_run(d).map_err(|e| CliError::Usage(format!("{}: {e}", d.display())))
        })
        .collect()
}

/// Derived metrics of `runs` against the run whose factor value is `baseline`.
pub fn derive(id: &str, runs: &[RunRecord], baseline: f64) -> Result<DerivedReport> {
    let factor = runs[0].monitoring_series.factor_name.clone();
    if let Some(r) = runs.iter().find(|r| r.monitoring_series.factor_name != factor) {
        return Err(CliError::Usage(format!(
            "run {} varies {:?}, others vary {factor:?}",
            r.run_id, r.monitoring_series.factor_name
        )));
    }
    let base = runs
        .iter()
        .find(|r| same_k(r.monitoring_series.factor_value, baseline))
        .ok_or_else(|| CliError::Usage(format!("no run with {factor} = {baseline}")))?;
    if let Some(why) = &base.aborted {
        return Err(CliError::Usage(format!("baseline run {} aborted: {why}", base.run_id)));
    }
    let complete: Vec<&RunRecord> = runs
        .iter()
        .filter(|r| {
            if let Some(why) = &r.aborted {
                eprintln!("warning: skipping aborted run {}: {why}", r.run_id);
                false
            } else {
                true
            }
        })
        .collect();

    let points = complete
        .iter()
        .map(|r| monitoring_point(r, base))
        .collect::<Result<Vec<_>, _>>()?;
    let scalability = scalability_curve(&points, baseline)?;

    let with_workload = complete.iter().all(|r| r.workload_series.is_some());
    let (productivity, impact) = if with_workload {
        let prod = complete
            .iter()
            .map(|r| productivity_point(r, base))
            .collect::<Result<Vec<_>, _>>()?;
        let impact = impact_curve(&prod, baseline)?;
        (prod, impact)
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(DerivedReport {
        run_id: id.to_string(),
        factor_name: factor,
        points: points.iter().map(PointRow::from).collect(),
        productivity: productivity.iter().map(ProductivityRow::from).collect(),
        impact: impact.iter().map(ImpactRow::from).collect(),
        scalability: scalability.iter().map(ScalabilityRow::from).collect(),
    })
}

pub fn run(dirs: &[PathBuf], baseline: f64, out: Option<&Path>) -> Result<PathBuf> {
    let runs = load_runs(dirs)?;
    let ids: Vec<&str> = runs.iter().map(|r| r.run_id.as_str()).collect();
    let id = content_id("derive", &[ids.join(",").as_bytes(), baseline.to_string().as_bytes()]);
    let dir = output_dir(out, &id);
    let mut manifest = RunManifest::begin(&id, Command::Derive, dirs.to_vec());

    let report = derive(&id, &runs, baseline)?;
    let mut outputs = Vec::new();

    let path = dir.join(DERIVED_FILE);
    write_json(&path, &report)?;
    outputs.push(path);

    let mut eff = DatFile::new(
        &format!("monitoring efficiency per {}", report.factor_name),
        &["k", "R", "C", "Q", "G"],
    );
    for p in &report.points {
        eff.row(&[p.k, p.r, p.c, p.q, p.g]);
    }
    let mut scal = DatFile::new("scalability degree against the baseline", &["k1", "k2", "psi"]);
    for s in &report.scalability {
        scal.row(&[s.k1, s.k2, s.psi]);
    }
    let mut imp = DatFile::new(
        "management impact against the baseline",
        &["k0", "k", "mim", "out_of_range"],
    );
    for m in &report.impact {
        imp.row(&[m.k0, m.k, m.mim, f64::from(u8::from(m.out_of_range))]);
    }
    for (name, dat) in [(EFFICIENCY_DAT, &eff), (SCALABILITY_DAT, &scal), (IMPACT_DAT, &imp)] {
        let path = dir.join(name);
        dat.write(&path)?;
        outputs.push(path);
    }
    manifest.outputs = outputs;
    manifest.commit(&dir)?;
    Ok(dir)
}
