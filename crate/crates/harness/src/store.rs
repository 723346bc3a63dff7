//! Run directories: CSVs for samples and resources plus `run.json`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use monlab_core::io::{read_resources, read_samples, write_resources, write_samples};
use monlab_core::metrics::{Entity, MetricSample, MetricSeries, Qualifier};
use serde::{Deserialize, Serialize};

use crate::bench::RunRecord;
use crate::error::{HarnessError, Result};
use crate::plan::BenchPlan;

pub const SAMPLES_FILE: &str = "samples.csv";
pub const WORKLOAD_FILE: &str = "workload_samples.csv";
pub const RESOURCES_FILE: &str = "resources.csv";
pub const RUN_FILE: &str = "run.json";
pub const PLAN_FILE: &str = "plan.txt";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeriesMeta {
    qualifier: Qualifier,
    factor_name: String,
    factor_value: f64,
    duration: f64,
}

impl SeriesMeta {
    fn of(s: &MetricSeries) -> Self {
        SeriesMeta {
            qualifier: s.qualifier,
            factor_name: s.factor_name.clone(),
            factor_value: s.factor_value,
            duration: s.duration,
        }
    }
}

/// Everything in a [`RunRecord`] except the sample rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunMeta {
    run_id: String,
    plan: BenchPlan,
    monitoring: SeriesMeta,
    workload: Option<SeriesMeta>,
    started_at: DateTime<Utc>,
    finished_at: DateTime<Utc>,
    aborted: Option<String>,
    rounds: usize,
    achieved_round_rate: f64,
    max_backlog: usize,
}

/// Files a run directory holds for `record`.
pub fn run_files(dir: &Path, record: &RunRecord) -> Vec<PathBuf> {
    let mut v = vec![dir.join(PLAN_FILE), dir.join(SAMPLES_FILE), dir.join(RESOURCES_FILE)];
    if record.workload_series.is_some() {
        v.push(dir.join(WORKLOAD_FILE));
    }
    v.push(dir.join(RUN_FILE));
    v
}

/// Writes the run into `dir` (created if needed); `run.json` goes last.
pub fn write_run(dir: &Path, record: &RunRecord) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(PLAN_FILE), record.plan.to_text())?;
    let csv_out = |name: &str| -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(dir.join(name))?))
    };
    write_samples(csv_out(SAMPLES_FILE)?, &record.run_id, &record.monitoring_series.samples)?;
    let mut resources = record.monitoring_series.resources.clone();
    if let Some(w) = &record.workload_series {
        write_samples(csv_out(WORKLOAD_FILE)?, &record.run_id, &w.samples)?;
        resources.extend(w.resources.iter().cloned());
    }
    resources.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    write_resources(csv_out(RESOURCES_FILE)?, &record.run_id, &resources)?;
    let meta = RunMeta {
        run_id: record.run_id.clone(),
        plan: record.plan.clone(),
        monitoring: SeriesMeta::of(&record.monitoring_series),
        workload: record.workload_series.as_ref().map(SeriesMeta::of),
        started_at: record.started_at,
        finished_at: record.finished_at,
        aborted: record.aborted.clone(),
        rounds: record.rounds,
        achieved_round_rate: record.achieved_round_rate,
        max_backlog: record.max_backlog,
    };
    let mut f = BufWriter::new(File::create(dir.join(RUN_FILE))?);
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(run_files(dir, record))
}

fn load_samples(path: &Path) -> Result<Vec<MetricSample>> {
    let rows = read_samples(BufReader::new(File::open(path)?))?;
    Ok(rows.into_iter().map(|(_, s)| s).collect())
}

fn series(meta: &SeriesMeta, samples: Vec<MetricSample>, resources: Vec<monlab_core::metrics::ResourceSample>) -> Result<MetricSeries> {
    let mut s = MetricSeries::new(meta.qualifier, meta.factor_name.clone(), meta.factor_value, meta.duration);
    for x in samples {
        s.record_sample(x)?;
    }
    for r in resources {
        s.record_resource(r)?;
    }
    Ok(s)
}

/// Loads a run directory written by [`write_run`].
pub fn read_run(dir: &Path) -> Result<RunRecord> {
    let meta_path = dir.join(RUN_FILE);
    if !meta_path.is_file() {
        return Err(HarnessError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} is not a run directory", dir.display()),
        )));
    }
    let meta: RunMeta = serde_json::from_reader(BufReader::new(File::open(meta_path)?))?;
    let resources = read_resources(BufReader::new(File::open(dir.join(RESOURCES_FILE))?))?;
    let (work_res, mon_res): (Vec<_>, Vec<_>) =
        resources.into_iter().partition(|r| r.entity == Entity::Workload);
    let monitoring_series = series(&meta.monitoring, load_samples(&dir.join(SAMPLES_FILE))?, mon_res)?;
    let workload_series = match &meta.workload {
        Some(m) => Some(series(m, load_samples(&dir.join(WORKLOAD_FILE))?, work_res)?),
        None => None,
    };
    Ok(RunRecord {
        run_id: meta.run_id,
        plan: meta.plan,
        monitoring_series,
        workload_series,
        started_at: meta.started_at,
        finished_at: meta.finished_at,
        aborted: meta.aborted,
        rounds: meta.rounds,
        achieved_round_rate: meta.achieved_round_rate,
        max_backlog: meta.max_backlog,
    })
}
