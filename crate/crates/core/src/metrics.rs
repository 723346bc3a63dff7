//! Measurement records and the speed / cost / quality summaries computed from them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::stats::{mean, percentile_sorted, sorted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    /// A manager GET against an agent.
    Poll,
    /// A functional workload task (the managed system's own work).
    Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Timeout,
    Error,
}

/// One timestamped measurement of a monitoring (or workload) operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    /// Seconds since run start, monotonic clock.
    pub timestamp: f64,
    pub agent_id: String,
    pub activity: Activity,
    pub attribute_count: u32,
    /// Request-send to response-complete, seconds. `None` unless `status == Ok`.
    pub delay: Option<f64>,
    pub request_bytes: u64,
    pub response_bytes: u64,
    pub status: Status,
}

impl MetricSample {
    pub fn ok(
        timestamp: f64,
        agent_id: impl Into<String>,
        attribute_count: u32,
        delay: f64,
        request_bytes: u64,
        response_bytes: u64,
    ) -> Self {
        MetricSample {
            timestamp,
            agent_id: agent_id.into(),
            activity: Activity::Poll,
            attribute_count,
            delay: Some(delay),
            request_bytes,
            response_bytes,
            status: Status::Ok,
        }
    }

    /// A failed poll; `status` must be `Timeout` or `Error`.
    pub fn failed(
        timestamp: f64,
        agent_id: impl Into<String>,
        attribute_count: u32,
        request_bytes: u64,
        status: Status,
    ) -> Self {
        debug_assert!(status != Status::Ok);
        MetricSample {
            timestamp,
            agent_id: agent_id.into(),
            activity: Activity::Poll,
            attribute_count,
            delay: None,
            request_bytes,
            response_bytes: 0,
            status,
        }
    }

    /// A completed workload task with the given latency.
    pub fn task(timestamp: f64, source: impl Into<String>, latency: f64) -> Self {
        MetricSample {
            timestamp,
            agent_id: source.into(),
            activity: Activity::Task,
            attribute_count: 1,
            delay: Some(latency),
            request_bytes: 0,
            response_bytes: 0,
            status: Status::Ok,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Checks the per-sample invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSample(m.to_string()));
        if !self.timestamp.is_finite() || self.timestamp < 0.0 {
            return bad("timestamp must be finite and non-negative");
        }
        match (self.status, self.delay) {
            (Status::Ok, Some(d)) if d.is_finite() && d >= 0.0 => {}
            (Status::Ok, _) => return bad("ok sample needs a finite delay >= 0"),
            (_, Some(_)) => return bad("delay is only defined for ok samples"),
            (_, None) => {}
        }
        if self.is_ok() {
            if self.attribute_count < 1 {
                return bad("ok sample carries no attributes");
            }
            if self.activity == Activity::Poll
                && (self.request_bytes == 0 || self.response_bytes == 0)
            {
                return bad("ok poll sample needs request and response bytes");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    Manager,
    Agent,
    Workload,
}

impl Entity {
    pub fn as_str(self) -> &'static str {
        match self {
            Entity::Manager => "manager",
            Entity::Agent => "agent",
            Entity::Workload => "workload",
        }
    }
}

/// One periodic resource reading for an entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSample {
    pub timestamp: f64,
    pub entity: Entity,
    /// Fraction of one CPU, in `[0, 1]`.
    pub cpu_fraction: f64,
    /// Absent when the entity's storage is not observable.
    pub memory_bytes: Option<u64>,
}

impl ResourceSample {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cpu_fraction) {
            return Err(Error::InvalidSample(format!(
                "cpu_fraction {} outside [0, 1]",
                self.cpu_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualifier {
    OneToOne,
    OneToMany,
}

/// A tagged collection of samples taken under one factor value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub qualifier: Qualifier,
    pub factor_name: String,
    pub factor_value: f64,
    pub samples: Vec<MetricSample>,
    pub resources: Vec<ResourceSample>,
    /// Seconds.
    pub duration: f64,
}

impl MetricSeries {
    pub fn new(
        qualifier: Qualifier,
        factor_name: impl Into<String>,
        factor_value: f64,
        duration: f64,
    ) -> Self {
        MetricSeries {
            qualifier,
            factor_name: factor_name.into(),
            factor_value,
            samples: Vec::new(),
            resources: Vec::new(),
            duration,
        }
    }

    /// Appends a sample, rejecting out-of-order timestamps, invalid samples and
    /// a second agent on a one-to-one series.
    pub fn record_sample(&mut self, sample: MetricSample) -> Result<()> {
        sample.validate()?;
        if let Some(last) = self.samples.last() {
            if sample.timestamp < last.timestamp {
                return Err(Error::OutOfOrder {
                    last: last.timestamp,
                    got: sample.timestamp,
                });
            }
            if self.qualifier == Qualifier::OneToOne && last.agent_id != sample.agent_id {
                return Err(Error::Qualifier(format!(
                    "one-to-one series for agent {:?} got a sample from {:?}",
                    last.agent_id, sample.agent_id
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn record_resource(&mut self, sample: ResourceSample) -> Result<()> {
        sample.validate()?;
        if let Some(last) = self.resources.last() {
            if sample.timestamp < last.timestamp {
                return Err(Error::OutOfOrder {
                    last: last.timestamp,
                    got: sample.timestamp,
                });
            }
        }
        self.resources.push(sample);
        Ok(())
    }

    pub fn distinct_agents(&self) -> BTreeSet<&str> {
        self.samples.iter().map(|s| s.agent_id.as_str()).collect()
    }

    /// Whole-series check, including the one-to-many "at least two agents" rule
    /// which cannot be enforced sample by sample.
    pub fn validate(&self) -> Result<()> {
        let agents = self.distinct_agents().len();
        match self.qualifier {
            Qualifier::OneToOne if agents > 1 => {
                return Err(Error::Qualifier(format!(
                    "one-to-one series references {agents} agents"
                )))
            }
            Qualifier::OneToMany if !self.samples.is_empty() && agents < 2 => {
                return Err(Error::Qualifier(
                    "one-to-many series references fewer than 2 agents".into(),
                ))
            }
            _ => {}
        }
        if self.samples.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::InvalidSample("timestamps decrease".into()));
        }
        for s in &self.samples {
            s.validate()?;
        }
        for r in &self.resources {
            r.validate()?;
        }
        Ok(())
    }

    fn require_duration(&self) -> Result<()> {
        if self.duration.is_finite() && self.duration > 0.0 {
            Ok(())
        } else {
            Err(domain(format!("series duration {} must be > 0", self.duration)))
        }
    }

    fn ok_delays(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.is_ok())
            .filter_map(|s| s.delay)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSummary {
    pub throughput_attrs_per_sec: f64,
    pub delay_mean: Option<f64>,
    pub delay_p50: Option<f64>,
    pub delay_p95: Option<f64>,
    pub delay_p99: Option<f64>,
    pub delay_max: Option<f64>,
    pub ok_count: usize,
    pub timeout_count: usize,
    pub error_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    /// Request plus response bytes per second; absent when no poll traffic was recorded.
    pub network_bytes_per_sec: Option<f64>,
    pub manager_cpu_mean: Option<f64>,
    pub agent_cpu_mean: Option<f64>,
    pub workload_cpu_mean: Option<f64>,
    pub manager_mem_peak: Option<f64>,
    pub agent_mem_peak: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub delay_tolerance: f64,
    pub timeliness: f64,
    pub temporal_error_mean: f64,
}

/// Throughput and delay distribution over the ok samples.
pub fn speed_summary(series: &MetricSeries) -> Result<SpeedSummary> {
    series.require_duration()?;
    let mut ok_count = 0;
    let mut timeout_count = 0;
    let mut error_count = 0;
    let mut attrs = 0u64;
    for s in &series.samples {
        match s.status {
            Status::Ok => {
                ok_count += 1;
                attrs += u64::from(s.attribute_count);
            }
            Status::Timeout => timeout_count += 1,
            Status::Error => error_count += 1,
        }
    }
    let delays = sorted(&series.ok_delays());
    Ok(SpeedSummary {
        throughput_attrs_per_sec: attrs as f64 / series.duration,
        delay_mean: mean(&delays),
        delay_p50: percentile_sorted(&delays, 0.50),
        delay_p95: percentile_sorted(&delays, 0.95),
        delay_p99: percentile_sorted(&delays, 0.99),
        delay_max: delays.last().copied(),
        ok_count,
        timeout_count,
        error_count,
    })
}

/// Network rate, per-entity CPU means and storage peaks.
pub fn cost_summary(series: &MetricSeries) -> Result<CostSummary> {
    series.require_duration()?;
    let polls: Vec<&MetricSample> = series
        .samples
        .iter()
        .filter(|s| s.activity == Activity::Poll)
        .collect();
    let network_bytes_per_sec = if polls.is_empty() {
        None
    } else {
        let total: u64 = polls
            .iter()
            .map(|s| s.request_bytes + s.response_bytes)
            .sum();
        Some(total as f64 / series.duration)
    };

    let cpu_mean = |e: Entity| {
        let v: Vec<f64> = series
            .resources
            .iter()
            .filter(|r| r.entity == e)
            .map(|r| r.cpu_fraction)
            .collect();
        mean(&v)
    };
    let mem_peak = |e: Entity| {
        series
            .resources
            .iter()
            .filter(|r| r.entity == e)
            .filter_map(|r| r.memory_bytes)
            .max()
            .map(|b| b as f64)
    };

    Ok(CostSummary {
        network_bytes_per_sec,
        manager_cpu_mean: cpu_mean(Entity::Manager),
        agent_cpu_mean: cpu_mean(Entity::Agent),
        workload_cpu_mean: cpu_mean(Entity::Workload),
        manager_mem_peak: mem_peak(Entity::Manager),
        agent_mem_peak: mem_peak(Entity::Agent),
    })
}

/// Timeliness against `delay_tolerance`; timeout and error samples count as late.
pub fn quality_summary(series: &MetricSeries, delay_tolerance: f64) -> Result<QualitySummary> {
    if !(delay_tolerance.is_finite() && delay_tolerance > 0.0) {
        return Err(domain(format!(
            "delay tolerance {delay_tolerance} must be > 0"
        )));
    }
    if series.samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut timely = 0usize;
    let mut excess = Vec::new();
    for s in &series.samples {
        if let (Status::Ok, Some(d)) = (s.status, s.delay) {
            if d < delay_tolerance {
                timely += 1;
            } else {
                excess.push(d - delay_tolerance);
            }
        }
    }
    Ok(QualitySummary {
        delay_tolerance,
        timeliness: timely as f64 / series.samples.len() as f64,
        temporal_error_mean: mean(&excess).unwrap_or(0.0),
    })
}
