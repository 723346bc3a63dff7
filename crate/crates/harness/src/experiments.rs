//! Turning runs into derived-metric inputs: efficiency points for the
//! monitoring and the functional side, scalability sweeps and impact sweeps.

use monlab_core::derived::{normalize_cost, EfficiencyPoint, ImpactResult, ProductivityPoint};
use monlab_core::metrics::{cost_summary, quality_summary, speed_summary, MetricSeries};

use crate::bench::{run_bench, RunRecord};
use crate::error::{HarnessError, Result};
use crate::plan::{BenchPlan, Factor};

fn point(
    k: f64,
    series: &MetricSeries,
    baseline: &MetricSeries,
    tolerance: f64,
) -> Result<EfficiencyPoint<f64>> {
    let r = speed_summary(series)?.throughput_attrs_per_sec;
    let c = normalize_cost(&cost_summary(series)?, &cost_summary(baseline)?)?;
    let q = quality_summary(series, tolerance)?.timeliness;
    Ok(EfficiencyPoint::new(k, r, c, q)?)
}

/// Monitoring efficiency G of `run`, cost normalized against `baseline`,
/// quality as timeliness at the run's delay tolerance.
pub fn monitoring_point(run: &RunRecord, baseline: &RunRecord) -> Result<EfficiencyPoint<f64>> {
    point(
        run.monitoring_series.factor_value,
        &run.monitoring_series,
        &baseline.monitoring_series,
        run.plan.delay_tolerance,
    )
}

fn workload_of(run: &RunRecord) -> Result<&MetricSeries> {
    run.workload_series
        .as_ref()
        .ok_or_else(|| HarnessError::Plan(format!("run {} has no workload series", run.run_id)))
}

/// Functional efficiency F: completed tasks per second over the normalized
/// workload cost, times the fraction of tasks that met their deadline.
pub fn functional_point(run: &RunRecord, baseline: &RunRecord) -> Result<EfficiencyPoint<f64>> {
    let deadline = run
        .plan
        .workload
        .ok_or_else(|| HarnessError::Plan(format!("run {} has no workload", run.run_id)))?
        .task_deadline;
    point(
        run.monitoring_series.factor_value,
        workload_of(run)?,
        workload_of(baseline)?,
        deadline,
    )
}

/// E = F/(F+G) for `run` against `baseline`.
pub fn productivity_point(run: &RunRecord, baseline: &RunRecord) -> Result<ProductivityPoint<f64>> {
    let f = functional_point(run, baseline)?;
    let g = monitoring_point(run, baseline)?;
    Ok(ProductivityPoint::new(
        run.monitoring_series.factor_value,
        f.efficiency_g,
        g.efficiency_g,
    )?)
}

/// Runs `plan` once per agent count and returns the monitoring efficiency of
/// each, normalized against the run at `agent_counts[0]`.
pub fn scalability_sweep(plan: &BenchPlan, agent_counts: &[usize]) -> Result<Vec<(RunRecord, EfficiencyPoint<f64>)>> {
    let runs = agent_counts
        .iter()
        .map(|&n| {
            let mut p = plan.clone();
            p.agent_count = n;
            p.factor = Factor::AgentCount;
            run_bench(&p)
        })
        .collect::<Result<Vec<_>>>()?;
    let Some(base) = runs.first() else {
        return Ok(Vec::new());
    };
    let points = runs
        .iter()
        .map(|r| monitoring_point(r, base))
        .collect::<Result<Vec<_>>>()?;
    Ok(runs.into_iter().zip(points).collect())
}

/// One monitor rate of an impact sweep. `productivity` is `None` when the
/// run aborted.
#[derive(Debug, Clone)]
pub struct ImpactPoint {
    pub rate: f64,
    pub run: RunRecord,
    pub productivity: Option<ProductivityPoint<f64>>,
}

/// Runs `plan` at each monitor rate; `rates[0]` is the baseline k0. An
/// aborted run drops its own point; an aborted baseline fails the sweep.
pub fn impact_experiment(plan: &BenchPlan, rates: &[f64]) -> Result<Vec<ImpactPoint>> {
    if plan.workload.is_none() {
        return Err(HarnessError::Plan("impact sweep needs a workload".into()));
    }
    let runs = rates
        .iter()
        .map(|&rate| {
            let mut p = plan.clone();
            p.poll_rate = rate;
            p.factor = Factor::PollRate;
            run_bench(&p)
        })
        .collect::<Result<Vec<_>>>()?;
    let Some(base) = runs.first() else {
        return Ok(Vec::new());
    };
    if let Some(why) = &base.aborted {
        return Err(HarnessError::Aborted(format!("baseline run: {why}")));
    }
    let mut out = Vec::with_capacity(runs.len());
    for (rate, run) in rates.iter().zip(&runs) {
        let productivity = if run.is_aborted() {
            None
        } else {
            Some(productivity_point(run, base)?)
        };
        out.push(ImpactPoint {
            rate: *rate,
            run: run.clone(),
            productivity,
        });
    }
    Ok(out)
}

/// MIM of every completed point of a sweep against its first point.
pub fn impact_results(points: &[ImpactPoint]) -> Result<Vec<ImpactResult<f64>>> {
    let Some(base) = points.first().and_then(|p| p.productivity) else {
        return Ok(Vec::new());
    };
    points
        .iter()
        .filter_map(|p| p.productivity)
        .map(|p| {
            Ok(ImpactResult::new(
                base.factor_value,
                p.factor_value,
                base.productivity_e,
                p.productivity_e,
            )?)
        })
        .collect()
}
