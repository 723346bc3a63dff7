//! Derived metrics: efficiency, productivity, management impact and
//! scalability degree, computed from primary metric summaries.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::metrics::CostSummary;
use crate::scalar::Scalar;

/// Per-dimension weights used when reducing a cost vector to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub network: f64,
    pub manager_cpu: f64,
    pub agent_cpu: f64,
    pub workload_cpu: f64,
    pub manager_mem: f64,
    pub agent_mem: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            network: 1.0,
            manager_cpu: 1.0,
            agent_cpu: 1.0,
            workload_cpu: 1.0,
            manager_mem: 1.0,
            agent_mem: 1.0,
        }
    }
}

fn cost_dims(c: &CostSummary, w: &CostWeights) -> [(&'static str, Option<f64>, f64); 6] {
    [
        ("network", c.network_bytes_per_sec, w.network),
        ("manager_cpu", c.manager_cpu_mean, w.manager_cpu),
        ("agent_cpu", c.agent_cpu_mean, w.agent_cpu),
        ("workload_cpu", c.workload_cpu_mean, w.workload_cpu),
        ("manager_mem", c.manager_mem_peak, w.manager_mem),
        ("agent_mem", c.agent_mem_peak, w.agent_mem),
    ]
}

/// Scalar cost relative to `baseline`: the equally weighted mean of
/// `cost_dim / baseline_dim` over the dimensions present in both.
pub fn normalize_cost(cost: &CostSummary, baseline: &CostSummary) -> Result<f64> {
    normalize_cost_weighted(cost, baseline, &CostWeights::default())
}

/// Weighted variant of [`normalize_cost`]. Dimensions with zero weight are ignored.
pub fn normalize_cost_weighted(
    cost: &CostSummary,
    baseline: &CostSummary,
    weights: &CostWeights,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((name, c, w), (_, b, _)) in cost_dims(cost, weights)
        .into_iter()
        .zip(cost_dims(baseline, weights))
    {
        if !(w > 0.0) {
            continue;
        }
        let (Some(c), Some(b)) = (c, b) else { continue };
        if !(b > 0.0) {
            return Err(domain(format!("baseline {name} must be > 0, got {b}")));
        }
        if !(c >= 0.0) {
            return Err(domain(format!("{name} must be >= 0, got {c}")));
        }
        num += w * c / b;
        den += w;
    }
    if den == 0.0 {
        return Err(Error::IncomparableCosts);
    }
    Ok(num / den)
}

/// `G = R / C × Q`.
pub fn efficiency<T: Scalar>(speed: T, cost: T, quality: T) -> Result<T> {
    if !(cost > T::zero()) {
        return Err(domain(format!("cost must be > 0, got {cost}")));
    }
    if !(quality >= T::zero() && quality <= T::one()) {
        return Err(domain(format!("quality must be in [0, 1], got {quality}")));
    }
    if !(speed >= T::zero()) {
        return Err(domain(format!("speed must be >= 0, got {speed}")));
    }
    Ok(speed / cost * quality)
}

/// `E = F / (F + G)`.
pub fn productivity<T: Scalar>(functional: T, management: T) -> Result<T> {
    if !(functional >= T::zero() && management >= T::zero()) {
        return Err(domain("efficiencies must be >= 0"));
    }
    let total = functional + management;
    if !(total > T::zero()) {
        return Err(domain("no activity"));
    }
    Ok(functional / total)
}

/// `MIM = 1 − E(k) / E(k0)`, unclamped.
pub fn management_impact<T: Scalar>(e_baseline: T, e_k: T) -> Result<T> {
    if !(e_baseline > T::zero()) {
        return Err(domain(format!("baseline productivity must be > 0, got {e_baseline}")));
    }
    if !(e_k >= T::zero()) {
        return Err(domain(format!("productivity must be >= 0, got {e_k}")));
    }
    Ok(T::one() - e_k / e_baseline)
}

/// `Ψ = G(k2) / G(k1)`.
pub fn scalability_degree<T: Scalar>(g_k1: T, g_k2: T) -> Result<T> {
    if !(g_k1 > T::zero()) {
        return Err(domain(format!("baseline efficiency must be > 0, got {g_k1}")));
    }
    if !(g_k2 >= T::zero()) {
        return Err(domain(format!("efficiency must be >= 0, got {g_k2}")));
    }
    Ok(g_k2 / g_k1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyPoint<T> {
    pub factor_value: T,
    pub speed_r: T,
    pub cost_c: T,
    pub quality_q: T,
    pub efficiency_g: T,
}

impl<T: Scalar> EfficiencyPoint<T> {
    pub fn new(factor_value: T, speed_r: T, cost_c: T, quality_q: T) -> Result<Self> {
        Ok(EfficiencyPoint {
            factor_value,
            speed_r,
            cost_c,
            quality_q,
            efficiency_g: efficiency(speed_r, cost_c, quality_q)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductivityPoint<T> {
    pub factor_value: T,
    pub functional_f: T,
    pub management_g: T,
    pub productivity_e: T,
}

impl<T: Scalar> ProductivityPoint<T> {
    pub fn new(factor_value: T, functional_f: T, management_g: T) -> Result<Self> {
        Ok(ProductivityPoint {
            factor_value,
            functional_f,
            management_g,
            productivity_e: productivity(functional_f, management_g)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactResult<T> {
    pub baseline_k0: T,
    pub factor_k: T,
    pub mim: T,
    /// Set when `mim` falls outside `[0, 1]`.
    pub out_of_range: bool,
}

impl<T: Scalar> ImpactResult<T> {
    pub fn new(baseline_k0: T, factor_k: T, e_baseline: T, e_k: T) -> Result<Self> {
        let mim = management_impact(e_baseline, e_k)?;
        Ok(ImpactResult {
            baseline_k0,
            factor_k,
            mim,
            out_of_range: mim < T::zero() || mim > T::one(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalabilityResult<T> {
    pub k1: T,
    pub k2: T,
    pub psi: T,
}

impl<T: Scalar> ScalabilityResult<T> {
    pub fn new(k1: T, k2: T, g_k1: T, g_k2: T) -> Result<Self> {
        Ok(ScalabilityResult {
            k1,
            k2,
            psi: scalability_degree(g_k1, g_k2)?,
        })
    }

    /// `Ψ ≥ threshold`; `1` is the usual cut.
    pub fn scales_well(&self, threshold: T) -> bool {
        self.psi >= threshold
    }
}

fn same_factor<T: Scalar>(a: T, b: T) -> bool {
    a == b || (a - b).abs() <= T::lit(1e-12) * a.abs().max(b.abs())
}

/// Ψ of every point relative to the point whose factor value is `baseline_k`.
pub fn scalability_curve<T: Scalar>(
    points: &[EfficiencyPoint<T>],
    baseline_k: T,
) -> Result<Vec<ScalabilityResult<T>>> {
    let base = points
        .iter()
        .find(|p| same_factor(p.factor_value, baseline_k))
        .ok_or_else(|| Error::MissingBaseline(format!("no point with k = {baseline_k}")))?;
    points
        .iter()
        .map(|p| {
            ScalabilityResult::new(
                base.factor_value,
                p.factor_value,
                base.efficiency_g,
                p.efficiency_g,
            )
        })
        .collect()
}

/// MIM of every productivity point relative to the one at `baseline_k`.
pub fn impact_curve<T: Scalar>(
    points: &[ProductivityPoint<T>],
    baseline_k: T,
) -> Result<Vec<ImpactResult<T>>> {
    let base = points
        .iter()
        .find(|p| same_factor(p.factor_value, baseline_k))
        .ok_or_else(|| Error::MissingBaseline(format!("no point with k = {baseline_k}")))?;
    points
        .iter()
        .map(|p| {
            ImpactResult::new(
                base.factor_value,
                p.factor_value,
                base.productivity_e,
                p.productivity_e,
            )
        })
        .collect()
}

// JSON report rows; field names are part of the external format.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub k: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductivityRow {
    pub k: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub k0: f64,
    pub k: f64,
    pub mim: f64,
    pub out_of_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityRow {
    pub k1: f64,
    pub k2: f64,
    pub psi: f64,
}

/// The per-experiment derived-metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedReport {
    pub run_id: String,
    pub factor_name: String,
    pub points: Vec<PointRow>,
    pub productivity: Vec<ProductivityRow>,
    pub impact: Vec<ImpactRow>,
    pub scalability: Vec<ScalabilityRow>,
}

impl<T: Scalar> From<&EfficiencyPoint<T>> for PointRow {
    fn from(p: &EfficiencyPoint<T>) -> Self {
        PointRow {
            k: p.factor_value.as_f64(),
            r: p.speed_r.as_f64(),
            c: p.cost_c.as_f64(),
            q: p.quality_q.as_f64(),
            g: p.efficiency_g.as_f64(),
        }
    }
}

impl<T: Scalar> From<&ProductivityPoint<T>> for ProductivityRow {
    fn from(p: &ProductivityPoint<T>) -> Self {
        ProductivityRow {
            k: p.factor_value.as_f64(),
            f: p.functional_f.as_f64(),
            g: p.management_g.as_f64(),
            e: p.productivity_e.as_f64(),
        }
    }
}

impl<T: Scalar> From<&ImpactResult<T>> for ImpactRow {
    fn from(r: &ImpactResult<T>) -> Self {
        ImpactRow {
            k0: r.baseline_k0.as_f64(),
            k: r.factor_k.as_f64(),
            mim: r.mim.as_f64(),
            out_of_range: r.out_of_range,
        }
    }
}

impl<T: Scalar> From<&ScalabilityResult<T>> for ScalabilityRow {
    fn from(r: &ScalabilityResult<T>) -> Self {
        ScalabilityRow {
            k1: r.k1.as_f64(),
            k2: r.k2.as_f64(),
            psi: r.psi.as_f64(),
        }
    }
}
