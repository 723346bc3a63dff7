//! Core of the monitoring performance lab: measurement records and their
//! speed / cost / quality summaries, the derived efficiency metrics, delay
//! distribution models and the aggregation-distortion simulator.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the harness and CLI use.

pub mod derived;
pub mod dist;
pub mod error;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DistributionSpecF64 = dist::DistributionSpec<f64>;
pub type DistributionSpecF32 = dist::DistributionSpec<f32>;
pub type DelayModelF64 = dist::DelayModel<f64>;
pub type FitReportF64 = dist::FitReport<f64>;
pub type EfficiencyPointF64 = derived::EfficiencyPoint<f64>;
pub type EfficiencyPointF32 = derived::EfficiencyPoint<f32>;
pub type ProductivityPointF64 = derived::ProductivityPoint<f64>;
pub type ImpactResultF64 = derived::ImpactResult<f64>;
pub type ScalabilityResultF64 = derived::ScalabilityResult<f64>;
pub type SimPlanF64 = sim::SimPlan<f64>;
pub type DistortionTraceF64 = sim::DistortionTrace<f64>;
pub type DistortionSummaryF64 = sim::DistortionSummary<f64>;
