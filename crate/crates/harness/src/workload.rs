//! Synthetic functional workload: a periodic stream of fixed-cost compute tasks.

use std::hint::black_box;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use monlab_core::metrics::MetricSample;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Thread name of the isolated workload runner.
pub const WORKLOAD_THREAD: &str = "monlab-work";
pub const WORKLOAD_SOURCE: &str = "workload";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    /// Tasks per second.
    pub task_rate: f64,
    /// Work units per task; one unit is calibrated to about 1 ms of CPU.
    pub task_size: f64,
    /// Seconds.
    pub task_deadline: f64,
    /// Run on the agents' scheduler thread instead of a dedicated one.
    pub colocated: bool,
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("workload.task_rate", self.task_rate),
            ("workload.task_size", self.task_size),
            ("workload.task_deadline_s", self.task_deadline),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(HarnessError::Plan(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn spin(iterations: u64) -> u64 {
    let mut x = 0x2545_F491_4F6C_DD1Du64;
    for i in 0..iterations {
        x = black_box(x.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(i | 1));
    }
    x
}

/// Kernel iterations per work unit, measured once per process.
pub fn iterations_per_unit() -> u64 {
    static CAL: OnceLock<u64> = OnceLock::new();
    *CAL.get_or_init(|| {
        spin(100_000);
        let mut n = 50_000u64;
        loop {
            let t = thread_cpu_time();
            spin(n);
            let spent = thread_cpu_time().saturating_sub(t).max(Duration::from_nanos(1));
            if spent >= Duration::from_millis(20) {
                // best of three windows guards against preemption during calibration
                let best = (0..3)
                    .map(|_| {
                        let t = thread_cpu_time();
                        spin(n);
                        thread_cpu_time().saturating_sub(t)
                    })
                    .min()
                    .unwrap_or(spent)
                    .min(spent);
                let per_ms = n as f64 / (best.as_secs_f64() * 1e3);
                return per_ms.max(1.0) as u64;
            }
            n *= 2;
        }
    })
}

/// CPU time consumed by the calling thread.
pub fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: valid clock id and a live out-pointer.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Runs one task of `units` work units, adding its CPU time to `cpu_ns`.
pub fn run_task(units: f64, cpu_ns: &AtomicU64) {
    let iters = (units * iterations_per_unit() as f64).round() as u64;
    let before = thread_cpu_time();
    black_box(spin(iters));
    let used = thread_cpu_time().saturating_sub(before);
    cpu_ns.fetch_add(used.as_nanos() as u64, Ordering::Relaxed);
}

fn arrival(start: Instant, rate: f64, j: u64) -> Instant {
    start + Duration::from_secs_f64(j as f64 / rate)
}

/// Isolated runner: executes tasks on the calling thread until `end`.
pub fn run_blocking(
    cfg: WorkloadConfig,
    epoch: Instant,
    start: Instant,
    end: Instant,
    cpu_ns: Arc<AtomicU64>,
) -> Vec<MetricSample> {
    let mut samples = Vec::new();
    for j in 0.. {
        let due = arrival(start, cfg.task_rate, j);
        if due >= end {
            break;
        }
        let now = Instant::now();
        if due > now {
            std::thread::sleep(due - now);
        }
        run_task(cfg.task_size, &cpu_ns);
        let latency = due.elapsed().as_secs_f64();
        samples.push(MetricSample::task(
            due.duration_since(epoch).as_secs_f64(),
            WORKLOAD_SOURCE,
            latency,
        ));
    }
    samples
}

/// Colocated runner: same schedule, executed on a shared async scheduler so
/// task execution and request handling contend for the same thread.
pub async fn run_async(
    cfg: WorkloadConfig,
    epoch: Instant,
    start: Instant,
    end: Instant,
    cpu_ns: Arc<AtomicU64>,
) -> Vec<MetricSample> {
    let mut samples = Vec::new();
    for j in 0.. {
        let due = arrival(start, cfg.task_rate, j);
        if due >= end {
            break;
        }
        tokio::time::sleep_until(due.into()).await;
        run_task(cfg.task_size, &cpu_ns);
        let latency = due.elapsed().as_secs_f64();
        samples.push(MetricSample::task(
            due.duration_since(epoch).as_secs_f64(),
            WORKLOAD_SOURCE,
            latency,
        ));
        // let queued request handlers run between tasks
        tokio::task::yield_now().await;
    }
    samples
}
