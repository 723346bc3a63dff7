//! Deterministic simulation of a centralized aggregation monitor whose
//! per-agent responses reach the manager after random delays.
//!
//! At every poll instant each agent's true value is sampled and a response
//! leaves for the manager. The manager's view of an agent at time `t` is the
//! response with the latest generation time among those received by `t`
//! (zero before the first arrival). The real aggregate `A(t)` and the observed
//! aggregate `Â(t)` are both evaluated at every poll instant.

use serde::{Deserialize, Serialize};

use crate::dist::DelayModel;
use crate::error::{domain, Error, Result};
use crate::rng::UniformStream;
use crate::scalar::Scalar;

/// Poll intervals at the start of a run excluded from summary statistics.
pub const WARMUP_INTERVALS: usize = 3;
const REL_EPS: f64 = 1e-9;
const VALUE_STREAM_TAG: u64 = 0x5641_4C55_4553_0001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueProcess<T> {
    /// Counter increasing at `rate` per second.
    RateCounter { rate: T },
    /// ±`step` per poll interval, equiprobable.
    RandomWalk { step: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPlan<T> {
    pub agent_count: usize,
    pub poll_interval: T,
    pub duration: T,
    pub delay: DelayModel<T>,
    pub value_process: ValueProcess<T>,
    pub aggregation: Aggregation,
    pub seed: u64,
    /// Per-response processing time of a single FIFO collector at the manager.
    /// Zero disables manager queueing; arrivals are then the raw delays.
    #[serde(default)]
    pub manager_service: T,
}

impl<T: Scalar> SimPlan<T> {
    pub fn validate(&self) -> Result<()> {
        if self.agent_count < 1 {
            return Err(domain("agent_count must be >= 1"));
        }
        if !(self.poll_interval.is_finite() && self.poll_interval > T::zero()) {
            return Err(domain("poll_interval must be > 0"));
        }
        if !(self.duration.is_finite() && self.duration >= T::lit(10.0) * self.poll_interval) {
            return Err(domain("duration must be >= 10 poll intervals"));
        }
        if !(self.manager_service.is_finite() && self.manager_service >= T::zero()) {
            return Err(domain("manager_service must be >= 0"));
        }
        match self.value_process {
            ValueProcess::RateCounter { rate } if !rate.is_finite() => {
                Err(domain("rate must be finite"))
            }
            ValueProcess::RandomWalk { step } if !(step.is_finite() && step >= T::zero()) => {
                Err(domain("step must be >= 0"))
            }
            _ => Ok(()),
        }
    }

    /// Number of poll instants `0, Δ, 2Δ, … ≤ duration`.
    pub fn poll_count(&self) -> usize {
        (self.duration / self.poll_interval + T::lit(1e-9))
            .floor()
            .to_usize()
            .unwrap_or(0)
            + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSummary<T> {
    pub rmse: T,
    pub mean_abs_rel_error: T,
    pub max_staleness_s: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionTrace<T> {
    pub times: Vec<T>,
    pub real_aggregate: Vec<T>,
    pub observed_aggregate: Vec<T>,
    pub per_point_error: Vec<T>,
    /// Per poll instant, the largest `t − arrival time` of the value held for any agent.
    pub staleness: Vec<T>,
    /// Leading points excluded from the summary.
    pub warmup_points: usize,
    pub summary: DistortionSummary<T>,
}

impl<T: Scalar> DistortionTrace<T> {
    /// Builds a trace from raw columns and computes its summary.
    pub fn from_columns(
        times: Vec<T>,
        real_aggregate: Vec<T>,
        observed_aggregate: Vec<T>,
        staleness: Vec<T>,
        warmup_points: usize,
    ) -> Result<Self> {
        let n = times.len();
        if real_aggregate.len() != n || observed_aggregate.len() != n || staleness.len() != n {
            return Err(domain("trace columns differ in length"));
        }
        let per_point_error = observed_aggregate
            .iter()
            .zip(&real_aggregate)
            .map(|(&o, &r)| o - r)
            .collect();
        let mut trace = DistortionTrace {
            times,
            real_aggregate,
            observed_aggregate,
            per_point_error,
            staleness,
            warmup_points,
            summary: DistortionSummary {
                rmse: T::zero(),
                mean_abs_rel_error: T::zero(),
                max_staleness_s: T::zero(),
            },
        };
        trace.summary = spatial_error_summary(&trace)?;
        Ok(trace)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// RMSE, mean absolute relative error and maximum staleness over the
/// post-warm-up points.
pub fn spatial_error_summary<T: Scalar>(trace: &DistortionTrace<T>) -> Result<DistortionSummary<T>> {
    let start = trace.warmup_points;
    let n = trace.per_point_error.len();
    if n <= start {
        return Err(Error::InsufficientData {
            needed: start + 1,
            got: n,
        });
    }
    let eps = T::lit(REL_EPS);
    let (mut sq, mut rel) = (T::zero(), T::zero());
    let mut stale = T::zero();
    for i in start..n {
        let e = trace.per_point_error[i];
        sq = sq + e * e;
        rel = rel + e.abs() / trace.real_aggregate[i].abs().max(eps);
        stale = stale.max(trace.staleness[i]);
    }
    let m = T::count(n - start);
    Ok(DistortionSummary {
        rmse: (sq / m).sqrt(),
        mean_abs_rel_error: rel / m,
        max_staleness_s: stale,
    })
}

fn true_values<T: Scalar>(plan: &SimPlan<T>, agent: usize, polls: usize) -> Vec<T> {
    match plan.value_process {
        ValueProcess::RateCounter { rate } => (0..polls)
            .map(|j| rate * T::count(j) * plan.poll_interval)
            .collect(),
        ValueProcess::RandomWalk { step } => {
            let mut stream = UniformStream::for_stream(plan.seed ^ VALUE_STREAM_TAG, agent as u64);
            let mut v = T::zero();
            (0..polls)
                .map(|j| {
                    if j > 0 {
                        v = if stream.next_u64() & 1 == 0 { v + step } else { v - step };
                    }
                    v
                })
                .collect()
        }
    }
}

/// Delay of every response, `[agent][poll]`, from one stream per agent.
fn draw_delays<T: Scalar>(plan: &SimPlan<T>, polls: usize) -> Vec<Vec<T>> {
    (0..plan.agent_count)
        .map(|agent| {
            let mut stream = UniformStream::for_stream(plan.seed, agent as u64);
            (0..polls).map(|_| plan.delay.draw(&mut stream)).collect()
        })
        .collect()
}

/// Adds single-server FIFO queueing at the manager to the raw delays.
fn apply_manager_queue<T: Scalar>(plan: &SimPlan<T>, delays: &mut [Vec<T>]) {
    let dt = plan.poll_interval;
    let mut events: Vec<(T, usize, usize)> = Vec::with_capacity(delays.len() * delays[0].len());
    for (i, row) in delays.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            events.push((T::count(j) * dt + d, i, j));
        }
    }
    events.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.2.cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });
    let mut busy_until = T::neg_infinity();
    for (arrival, i, j) in events {
        let done = arrival.max(busy_until) + plan.manager_service;
        busy_until = done;
        delays[i][j] = done - T::count(j) * dt;
    }
}

/// Runs the simulation described by `plan`.
pub fn simulate<T: Scalar>(plan: &SimPlan<T>) -> Result<DistortionTrace<T>> {
    plan.validate()?;
    let polls = plan.poll_count();
    let dt = plan.poll_interval;
    let mut delays = draw_delays(plan, polls);
    if plan.manager_service > T::zero() {
        apply_manager_queue(plan, &mut delays);
    }

    let times: Vec<T> = (0..polls).map(|j| T::count(j) * dt).collect();
    let mut real = vec![T::zero(); polls];
    let mut observed = vec![T::zero(); polls];
    let mut staleness = vec![T::zero(); polls];
    let mut newest_at = vec![None::<usize>; polls];

    for (agent, agent_delays) in delays.iter().enumerate() {
        let values = true_values(plan, agent, polls);
        newest_at.iter_mut().for_each(|x| *x = None);
        // Response j is visible from poll index j + ⌈d/Δ⌉ onwards.
        for (j, &d) in agent_delays.iter().enumerate() {
            let lag = (d / dt).ceil().to_usize().unwrap_or(usize::MAX);
            if let Some(m) = j.checked_add(lag).filter(|&m| m < polls) {
                newest_at[m] = Some(newest_at[m].map_or(j, |g| g.max(j)));
            }
        }
        let mut held: Option<usize> = None;
        for m in 0..polls {
            if let Some(g) = newest_at[m] {
                held = Some(held.map_or(g, |h| h.max(g)));
            }
            real[m] = real[m] + values[m];
            let (value, age) = match held {
                Some(g) => (values[g], times[m] - (times[g] + agent_delays[g])),
                None => (T::zero(), times[m]),
            };
            observed[m] = observed[m] + value;
            staleness[m] = staleness[m].max(age);
        }
    }

    if plan.aggregation == Aggregation::Mean {
        let n = T::count(plan.agent_count);
        real.iter_mut().for_each(|v| *v = *v / n);
        observed.iter_mut().for_each(|v| *v = *v / n);
    }
    DistortionTrace::from_columns(times, real, observed, staleness, WARMUP_INTERVALS.min(polls - 1))
}
