use std::path::{Path, PathBuf};

use monlab_core::dist::DelayModel;
use monlab_core::io::write_trace;
use monlab_core::sim::{simulate, Aggregation, DistortionSummary, SimPlan, ValueProcess};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::manifest::{Command, RunManifest};
use crate::output::{content_id, output_dir, write_file, write_json};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// `rate:R` or `walk:STEP`.
pub fn parse_process(s: &str) -> Result<ValueProcess<f64>> {
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad number {v:?} in --process")))
    };
    match s.split_once(':') {
        Some(("rate", v)) => Ok(ValueProcess::RateCounter { rate: num(v)? }),
        Some(("walk", v)) => Ok(ValueProcess::RandomWalk { step: num(v)? }),
        _ => Err(CliError::Usage(format!(
            "--process must be rate:R or walk:STEP, got {s:?}"
        ))),
    }
}

pub fn parse_aggregation(s: &str) -> Result<Aggregation> {
    match s {
        "sum" => Ok(Aggregation::Sum),
        "mean" => Ok(Aggregation::Mean),
        _ => Err(CliError::Usage(format!("--agg must be sum or mean, got {s:?}"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimOutput {
    pub plan: SimPlan<f64>,
    pub points: usize,
    pub warmup_points: usize,
    pub summary: DistortionSummary<f64>,
}

pub struct SimArgs<'a> {
    pub agents: usize,
    pub interval: f64,
    pub duration: f64,
    pub delay: &'a str,
    pub process: &'a str,
    pub aggregation: &'a str,
    pub manager_service: f64,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

pub fn run(args: &SimArgs<'_>) -> Result<PathBuf> {
    let plan = SimPlan {
        agent_count: args.agents,
        poll_interval: args.interval,
        duration: args.duration,
        delay: args.delay.parse::<DelayModel<f64>>()?,
        value_process: parse_process(args.process)?,
        aggregation: parse_aggregation(args.aggregation)?,
        seed: args.seed,
        manager_service: args.manager_service,
    };
    plan.validate()?;
    let plan_json = serde_json::to_string(&plan).map_err(CliError::runtime)?;
    let id = content_id("sim", &[plan_json.as_bytes()]);
    let dir = output_dir(args.out, &id);
    let mut manifest = RunManifest::begin(&id, Command::Simulate, Vec::new());

    let trace = simulate(&plan)?;
    let mut csv = Vec::new();
    write_trace(&mut csv, &trace)?;
    let trace_path = dir.join(TRACE_FILE);
    write_file(&trace_path, csv)?;
    let summary_path = dir.join(SUMMARY_FILE);
    write_json(
        &summary_path,
        &SimOutput {
            plan,
            points: trace.len(),
            warmup_points: trace.warmup_points,
            summary: trace.summary,
        },
    )?;
    manifest.outputs = vec![trace_path, summary_path];
    manifest.commit(&dir)?;
    Ok(dir)
}
