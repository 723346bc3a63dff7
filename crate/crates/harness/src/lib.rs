//! Localhost manager/agent polling benchmark.
//!
//! Agents serve a line protocol over TCP, a manager polls them in concurrent
//! rounds, and every poll becomes a [`MetricSample`](monlab_core::metrics::MetricSample).
//! An optional synthetic workload runs beside (or on the same scheduler as)
//! the agents so the cost of monitoring on useful work can be measured.

pub mod agent;
pub mod bench;
pub mod error;
pub mod experiments;
pub mod manager;
pub mod plan;
pub mod resources;
pub mod store;
pub mod wire;
pub mod workload;

pub use agent::{spawn_agents, AgentConfig, AgentSet, ValueModel};
pub use bench::{run_bench, RunRecord};
pub use error::{HarnessError, Result};
pub use manager::Manager;
pub use plan::{BenchPlan, Factor};
pub use workload::WorkloadConfig;
