//! Periodic per-entity CPU and storage readings.
//!
//! CPU comes from `/proc/self/task/<tid>/schedstat` (nanoseconds on CPU) for
//! the manager and agent scheduler threads, and from the task runner's own
//! thread-CPU accounting for the workload. A colocated workload's share is
//! removed from the agents' thread. Storage is the management data held:
//! response bytes retained by the manager, attribute values held by agents.

use std::fs;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use monlab_core::metrics::{Entity, ResourceSample};

pub const SAMPLER_THREAD: &str = "monlab-res";

/// Kernel thread id of the calling thread.
pub fn current_tid() -> i64 {
    // SAFETY: gettid has no preconditions.
    unsafe { libc::gettid() as i64 }
}

/// On-CPU nanoseconds of thread `tid` in this process, if it is alive.
pub fn thread_cpu_ns(tid: i64) -> Option<u64> {
    let stat = fs::read_to_string(format!("/proc/self/task/{tid}/schedstat")).ok()?;
    stat.split_whitespace().next()?.parse().ok()
}

/// Shared counters the sampler reads. Thread ids of 0 are not yet known.
#[derive(Debug, Clone, Default)]
pub struct ResourceProbes {
    pub manager_tid: Arc<AtomicI64>,
    pub agent_tid: i64,
    pub workload_cpu_ns: Arc<AtomicU64>,
    pub workload_colocated: bool,
    pub workload_enabled: bool,
    pub manager_storage: Arc<AtomicU64>,
    pub agent_storage: u64,
}

#[derive(Debug, Clone, Copy)]
struct Snapshot {
    at: Instant,
    manager: Option<u64>,
    agent: Option<u64>,
    workload: u64,
}

fn cpu_of(tid: i64) -> Option<u64> {
    if tid > 0 {
        thread_cpu_ns(tid)
    } else {
        None
    }
}

fn snapshot(probes: &ResourceProbes) -> Snapshot {
    Snapshot {
        at: Instant::now(),
        manager: cpu_of(probes.manager_tid.load(Ordering::Relaxed)),
        agent: cpu_of(probes.agent_tid),
        workload: probes.workload_cpu_ns.load(Ordering::Relaxed),
    }
}

fn readings(
    prev: &Snapshot,
    cur: &Snapshot,
    epoch: Instant,
    probes: &ResourceProbes,
) -> Vec<ResourceSample> {
    let wall = cur.at.duration_since(prev.at).as_nanos() as f64;
    if wall <= 0.0 {
        return Vec::new();
    }
    let ts = cur.at.duration_since(epoch).as_secs_f64();
    let frac = |ns: u64| (ns as f64 / wall).clamp(0.0, 1.0);
    let workload_ns = cur.workload.saturating_sub(prev.workload);
    let mut out = Vec::new();
    // a thread that appeared during the interval started from zero
    if let Some(b) = cur.manager {
        out.push(ResourceSample {
            timestamp: ts,
            entity: Entity::Manager,
            cpu_fraction: frac(b.saturating_sub(prev.manager.unwrap_or(0))),
            memory_bytes: Some(probes.manager_storage.load(Ordering::Relaxed)),
        });
    }
    if let Some(b) = cur.agent {
        let mut ns = b.saturating_sub(prev.agent.unwrap_or(0));
        if probes.workload_colocated {
            ns = ns.saturating_sub(workload_ns);
        }
        out.push(ResourceSample {
            timestamp: ts,
            entity: Entity::Agent,
            cpu_fraction: frac(ns),
            memory_bytes: Some(probes.agent_storage),
        });
    }
    if probes.workload_enabled {
        out.push(ResourceSample {
            timestamp: ts,
            entity: Entity::Workload,
            cpu_fraction: frac(workload_ns),
            memory_bytes: None,
        });
    }
    out
}

/// Background sampler taking one reading per entity every `interval`.
pub struct ResourceSampler {
    stop: Arc<AtomicBool>,
    samples: Arc<Mutex<Vec<ResourceSample>>>,
    thread: Option<JoinHandle<()>>,
}

impl ResourceSampler {
    /// The first reading covers `[start, start + interval)`.
    pub fn start(
        epoch: Instant,
        start: Instant,
        interval: Duration,
        probes: ResourceProbes,
    ) -> std::io::Result<Self> {
        let stop = Arc::new(AtomicBool::new(false));
        let samples = Arc::new(Mutex::new(Vec::new()));
        let thread = {
            let stop = stop.clone();
            let samples = samples.clone();
            std::thread::Builder::new()
                .name(SAMPLER_THREAD.into())
                .spawn(move || {
                    let mut prev: Option<Snapshot> = None;
                    let mut next = start;
                    while !stop.load(Ordering::Relaxed) {
                        let now = Instant::now();
                        if now < next {
                            std::thread::sleep((next - now).min(Duration::from_millis(20)));
                            continue;
                        }
                        let cur = snapshot(&probes);
                        if let Some(p) = &prev {
                            let batch = readings(p, &cur, epoch, &probes);
                            samples.lock().expect("sampler poisoned").extend(batch);
                        }
                        prev = Some(cur);
                        next += interval;
                    }
                })?
        };
        Ok(ResourceSampler {
            stop,
            samples,
            thread: Some(thread),
        })
    }

    /// Stops sampling and returns all full-interval readings.
    pub fn finish(mut self) -> Vec<ResourceSample> {
        self.halt();
        std::mem::take(&mut *self.samples.lock().expect("sampler poisoned"))
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ResourceSampler {
    fn drop(&mut self) {
        self.halt();
    }
}
