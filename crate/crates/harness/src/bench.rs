//! Full benchmark runs: agents, optional workload, paced polling rounds.

use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use monlab_core::metrics::{Entity, MetricSample, MetricSeries, Qualifier, ResourceSample};
use serde::{Deserialize, Serialize};

use crate::agent::{spawn_agents, AgentConfig};
use crate::error::{HarnessError, Result};
use crate::manager::{Manager, MANAGER_THREAD};
use crate::plan::BenchPlan;
use crate::resources::{current_tid, ResourceProbes, ResourceSampler};
use crate::workload::{self, WORKLOAD_THREAD};

/// Rounds the manager may fall behind schedule before the run is abandoned.
pub const MAX_BACKLOG: usize = 10;

// Time between setup and the first round, so connections are open and the
// first resource interval is not dominated by spawning.
const LEAD: Duration = Duration::from_millis(200);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub plan: BenchPlan,
    pub monitoring_series: MetricSeries,
    pub workload_series: Option<MetricSeries>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    /// Set when the run stopped early; the series hold what was collected.
    pub aborted: Option<String>,
    pub rounds: usize,
    /// Rounds per second actually achieved over the polling window.
    pub achieved_round_rate: f64,
    /// Largest number of rounds the manager was behind schedule.
    pub max_backlog: usize,
}

impl RunRecord {
    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }
}

/// 64-bit FNV-1a of `bytes`; used for content-derived identifiers.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable identifier derived from the plan text.
pub fn run_id(plan: &BenchPlan) -> String {
    format!("bench-{:016x}", fingerprint(plan.to_text().as_bytes()))
}

/// Agent configs implied by a plan.
pub fn agent_configs(plan: &BenchPlan) -> Vec<AgentConfig> {
    (0..plan.agent_count)
        .map(|i| AgentConfig {
            agent_id: format!("agent-{i:04}"),
            listen_port: plan.base_port.map_or(0, |p| p + i as u16),
            attribute_count: plan.attribute_count,
            value_model: plan.value_model,
            service_delay: plan.service_delay,
            colocated_workload: plan.workload.is_some_and(|w| w.colocated),
        })
        .collect()
}

struct PollOutcome {
    samples: Vec<MetricSample>,
    rounds: usize,
    max_backlog: usize,
    aborted: Option<String>,
    /// Seconds from the first scheduled round to the end of the last one.
    span: f64,
}

fn poll_loop(
    plan: &BenchPlan,
    endpoints: &[(String, std::net::SocketAddr)],
    epoch: Instant,
    start: Instant,
    storage: &AtomicU64,
    tid: &AtomicI64,
) -> Result<PollOutcome> {
    tid.store(current_tid(), Ordering::Relaxed);
    let timeout = Duration::from_secs_f64(plan.round_timeout);
    let mut manager = Manager::with_epoch(endpoints, epoch)?;
    manager.connect_all(timeout.max(Duration::from_millis(100)));
    let total = plan.round_count();
    let mut samples = Vec::with_capacity(total * plan.agent_count);
    let mut max_backlog = 0;
    let mut aborted = None;
    let mut rounds = 0;
    for j in 0..total {
        let due = start + Duration::from_secs_f64(j as f64 / plan.poll_rate);
        let now = Instant::now();
        if now < due {
            std::thread::sleep(due - now);
        } else {
            let behind = ((now - due).as_secs_f64() * plan.poll_rate) as usize;
            max_backlog = max_backlog.max(behind);
            if behind > MAX_BACKLOG {
                aborted = Some(format!(
                    "manager overloaded: {behind} rounds behind at round {j}"
                ));
                break;
            }
        }
        samples.extend(manager.poll_round(plan.attributes_per_poll, timeout));
        storage.store(manager.stored_bytes(), Ordering::Relaxed);
        rounds += 1;
    }
    let span = start.elapsed().as_secs_f64();
    // hold until the scheduled end so resource windows cover the whole run
    let end = start + Duration::from_secs_f64(plan.duration);
    let now = Instant::now();
    if aborted.is_none() && now < end {
        std::thread::sleep(end - now);
    }
    Ok(PollOutcome {
        samples,
        rounds,
        max_backlog,
        aborted,
        span,
    })
}

fn build_series(
    qualifier: Qualifier,
    plan: &BenchPlan,
    duration: f64,
    mut samples: Vec<MetricSample>,
    resources: Vec<ResourceSample>,
) -> Result<MetricSeries> {
    let mut series = MetricSeries::new(qualifier, plan.factor.as_str(), plan.factor_value(), duration);
    samples.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    for s in samples {
        series.record_sample(s)?;
    }
    for r in resources {
        series.record_resource(r)?;
    }
    Ok(series)
}

/// Executes a plan end to end. Spawn failures are errors; overload aborts
/// return a record flagged `aborted` with the partial data.
pub fn run_bench(plan: &BenchPlan) -> Result<RunRecord> {
    plan.validate()?;
    for w in plan.warnings() {
        log::warn!("{w}");
    }
    if plan.workload.is_some() {
        // calibrate before any timing starts
        workload::iterations_per_unit();
    }
    let started_at = Utc::now();
    let epoch = Instant::now();
    let agents = spawn_agents(&agent_configs(plan), plan.seed)?;
    let start = Instant::now() + LEAD;
    let end = start + Duration::from_secs_f64(plan.duration);

    let probes = ResourceProbes {
        manager_tid: Arc::default(),
        agent_tid: agents.thread_id(),
        workload_cpu_ns: Arc::default(),
        workload_colocated: plan.workload.is_some_and(|w| w.colocated),
        workload_enabled: plan.workload.is_some(),
        manager_storage: Arc::default(),
        agent_storage: agents.storage_bytes(),
    };

    enum Work {
        Colocated(tokio::sync::oneshot::Receiver<Vec<MetricSample>>),
        Isolated(std::thread::JoinHandle<Vec<MetricSample>>),
    }
    let work = match plan.workload {
        None => None,
        Some(cfg) if cfg.colocated => {
            let (tx, rx) = tokio::sync::oneshot::channel();
            let cpu = probes.workload_cpu_ns.clone();
            agents.handle().spawn(async move {
                let s = workload::run_async(cfg, epoch, start, end, cpu).await;
                let _ = tx.send(s);
            });
            Some(Work::Colocated(rx))
        }
        Some(cfg) => {
            let cpu = probes.workload_cpu_ns.clone();
            let h = std::thread::Builder::new()
                .name(WORKLOAD_THREAD.into())
                .spawn(move || workload::run_blocking(cfg, epoch, start, end, cpu))?;
            Some(Work::Isolated(h))
        }
    };

    let sampler = ResourceSampler::start(
        epoch,
        start,
        Duration::from_secs_f64(plan.resource_interval),
        probes.clone(),
    )?;

    let outcome = {
        let plan = plan.clone();
        let endpoints = agents.endpoints().to_vec();
        let storage = probes.manager_storage.clone();
        let tid = probes.manager_tid.clone();
        std::thread::Builder::new()
            .name(MANAGER_THREAD.into())
            .spawn(move || poll_loop(&plan, &endpoints, epoch, start, &storage, &tid))?
            .join()
            .map_err(|_| HarnessError::Aborted("manager thread panicked".into()))??
    };

    let task_samples = match work {
        None => None,
        Some(Work::Colocated(rx)) => {
            if outcome.aborted.is_some() {
                None
            } else {
                rx.blocking_recv().ok()
            }
        }
        Some(Work::Isolated(h)) => h.join().ok(),
    };
    let resources = sampler.finish();
    agents.shutdown();
    let finished_at = Utc::now();

    let duration = if outcome.aborted.is_some() {
        outcome.span.max(1e-3)
    } else {
        plan.duration.max(outcome.span)
    };
    let (work_res, mon_res): (Vec<_>, Vec<_>) =
        resources.into_iter().partition(|r| r.entity == Entity::Workload);
    let qualifier = if plan.agent_count == 1 {
        Qualifier::OneToOne
    } else {
        Qualifier::OneToMany
    };
    let monitoring_series = build_series(qualifier, plan, duration, outcome.samples, mon_res)?;
    let workload_series = match (plan.workload, task_samples) {
        (Some(_), Some(s)) => Some(build_series(Qualifier::OneToOne, plan, duration, s, work_res)?),
        (Some(_), None) if outcome.aborted.is_some() => None,
        (Some(_), None) => {
            return Err(HarnessError::Aborted("workload runner failed".into()));
        }
        _ => None,
    };

    Ok(RunRecord {
        run_id: run_id(plan),
        plan: plan.clone(),
        monitoring_series,
        workload_series,
        started_at,
        finished_at,
        aborted: outcome.aborted,
        rounds: outcome.rounds,
        achieved_round_rate: outcome.rounds as f64 / duration,
        max_backlog: outcome.max_backlog,
    })
}
