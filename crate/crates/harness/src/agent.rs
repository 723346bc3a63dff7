//! Synthetic agents serving the wire protocol on localhost.

use std::net::{SocketAddr, TcpListener as StdListener};
use std::sync::{mpsc, Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use monlab_core::dist::DelayModel;
use monlab_core::rng::UniformStream;
use serde::{Deserialize, Serialize};
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::runtime::Handle;
use tokio::sync::oneshot;

use crate::error::{HarnessError, Result};
use crate::resources::current_tid;
use crate::wire::{parse_get, Response, MAX_LINE};

/// Thread name of the agents' shared scheduler; resource accounting keys on it.
pub const AGENT_THREAD: &str = "monlab-agent";

/// How an agent's attribute values evolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueModel {
    Constant,
    /// ±`step` on every read, per attribute.
    RandomWalk { step: f64 },
    /// `rate × seconds since start`.
    RateCounter { rate: f64 },
}

impl std::str::FromStr for ValueModel {
    type Err = HarnessError;

    /// `constant`, `walk:STEP` or `rate:R`.
    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| HarnessError::Plan(format!("bad number {v:?} in value model")))
        };
        match s.trim().split_once(':') {
            None if s.trim() == "constant" => Ok(ValueModel::Constant),
            Some(("walk", v)) => Ok(ValueModel::RandomWalk { step: num(v)? }),
            Some(("rate", v)) => Ok(ValueModel::RateCounter { rate: num(v)? }),
            _ => Err(HarnessError::Plan(format!("unknown value model {s:?}"))),
        }
    }
}

impl std::fmt::Display for ValueModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValueModel::Constant => f.write_str("constant"),
            ValueModel::RandomWalk { step } => write!(f, "walk:{step}"),
            ValueModel::RateCounter { rate } => write!(f, "rate:{rate}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub agent_id: String,
    /// 0 lets the OS pick a free port.
    pub listen_port: u16,
    pub attribute_count: u32,
    pub value_model: ValueModel,
    /// Artificial processing delay applied to every request.
    pub service_delay: Option<DelayModel<f64>>,
    pub colocated_workload: bool,
}

impl AgentConfig {
    pub fn new(agent_id: impl Into<String>, attribute_count: u32) -> Self {
        AgentConfig {
            agent_id: agent_id.into(),
            listen_port: 0,
            attribute_count,
            value_model: ValueModel::Constant,
            service_delay: None,
            colocated_workload: false,
        }
    }
}

/// Name of the `i`-th attribute.
pub fn attribute_id(i: u32) -> String {
    format!("attr{i}")
}

struct AgentState {
    config: AgentConfig,
    started: Instant,
    inner: Mutex<(UniformStream, Vec<f64>)>,
}

impl AgentState {
    fn read(&self, ids: &[String]) -> Response {
        let mut out = Vec::with_capacity(ids.len());
        let mut guard = self.inner.lock().expect("agent state poisoned");
        let (stream, walk) = &mut *guard;
        for id in ids {
            let idx = id
                .strip_prefix("attr")
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|&n| n < self.config.attribute_count && id == &attribute_id(n));
            let Some(idx) = idx else {
                return Response::Err(format!("unknown attribute {id}"));
            };
            let value = match self.config.value_model {
                ValueModel::Constant => 100.0 + f64::from(idx),
                ValueModel::RandomWalk { step } => {
                    let v = &mut walk[idx as usize];
                    *v += if stream.next_u64() & 1 == 0 { step } else { -step };
                    *v
                }
                ValueModel::RateCounter { rate } => rate * self.started.elapsed().as_secs_f64(),
            };
            out.push((id.clone(), value));
        }
        Response::Values(out)
    }

    fn service_delay(&self) -> Option<Duration> {
        let model = self.config.service_delay?;
        let mut guard = self.inner.lock().expect("agent state poisoned");
        let secs = model.draw(&mut guard.0);
        Some(Duration::from_secs_f64(secs.max(0.0)))
    }
}

async fn serve(stream: TcpStream, state: Arc<AgentState>) {
    let _ = stream.set_nodelay(true);
    let (read, mut write) = stream.into_split();
    let mut reader = BufReader::new(read);
    let mut line = String::new();
    loop {
        line.clear();
        match (&mut reader).take(MAX_LINE as u64).read_line(&mut line).await {
            Ok(0) | Err(_) => break,
            Ok(_) => {}
        }
        let response = match parse_get(&line) {
            Ok(ids) => {
                if let Some(d) = state.service_delay() {
                    tokio::time::sleep(d).await;
                }
                state.read(&ids)
            }
            Err(e) => Response::Err(e.to_string()),
        };
        let Ok(bytes) = response.encode() else { break };
        if write.write_all(bytes.as_bytes()).await.is_err() {
            break;
        }
    }
}

async fn accept_loop(listener: TcpListener, state: Arc<AgentState>) {
    loop {
        match listener.accept().await {
            Ok((stream, _)) => {
                tokio::spawn(serve(stream, state.clone()));
            }
            Err(e) => {
                log::debug!("agent {} accept error: {e}", state.config.agent_id);
                tokio::time::sleep(Duration::from_millis(5)).await;
            }
        }
    }
}

/// A running set of agents sharing one scheduler thread. Dropping it stops
/// every agent and closes all listeners.
pub struct AgentSet {
    endpoints: Vec<(String, SocketAddr)>,
    configs: Vec<AgentConfig>,
    handle: Handle,
    tid: i64,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl AgentSet {
    /// `(agent_id, address)` per agent, in spawn order.
    pub fn endpoints(&self) -> &[(String, SocketAddr)] {
        &self.endpoints
    }

    pub fn configs(&self) -> &[AgentConfig] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    /// Handle to the agents' scheduler, for colocated work.
    pub fn handle(&self) -> &Handle {
        &self.handle
    }

    /// Kernel thread id of the agents' scheduler.
    pub fn thread_id(&self) -> i64 {
        self.tid
    }

    /// Bytes of management data held by the agents (one `f64` per attribute).
    pub fn storage_bytes(&self) -> u64 {
        self.configs
            .iter()
            .map(|c| u64::from(c.attribute_count) * 8)
            .sum()
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for AgentSet {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds every agent's port, then starts serving. If any bind fails, the
/// ports already bound are released and the error is returned.
pub fn spawn_agents(configs: &[AgentConfig], seed: u64) -> Result<AgentSet> {
    let mut listeners = Vec::with_capacity(configs.len());
    for c in configs {
        if c.attribute_count < 1 {
            return Err(HarnessError::Plan(format!(
                "agent {} needs at least one attribute",
                c.agent_id
            )));
        }
        let listener =
            StdListener::bind(("127.0.0.1", c.listen_port)).map_err(|source| HarnessError::Bind {
                agent: c.agent_id.clone(),
                port: c.listen_port,
                source,
            })?;
        listener.set_nonblocking(true)?;
        listeners.push(listener);
    }
    let endpoints = configs
        .iter()
        .zip(&listeners)
        .map(|(c, l)| Ok((c.agent_id.clone(), l.local_addr()?)))
        .collect::<Result<Vec<_>>>()?;

    let states: Vec<Arc<AgentState>> = configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let stream = UniformStream::for_stream(seed, i as u64);
            Arc::new(AgentState {
                config: c.clone(),
                started: Instant::now(),
                inner: Mutex::new((stream, vec![0.0; c.attribute_count as usize])),
            })
        })
        .collect();

    let (handle_tx, handle_rx) = mpsc::channel();
    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name(AGENT_THREAD.into())
        .spawn(move || {
            let rt = match tokio::runtime::Builder::new_current_thread().enable_all().build() {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = handle_tx.send(Err(e));
                    return;
                }
            };
            let setup: std::io::Result<()> = rt.block_on(async {
                for (listener, state) in listeners.into_iter().zip(states) {
                    let listener = TcpListener::from_std(listener)?;
                    tokio::spawn(accept_loop(listener, state));
                }
                Ok(())
            });
            if let Err(e) = setup {
                let _ = handle_tx.send(Err(e));
                return;
            }
            let _ = handle_tx.send(Ok((rt.handle().clone(), current_tid())));
            rt.block_on(async {
                let _ = stop_rx.await;
            });
        })?;
    let (handle, tid) = match handle_rx.recv() {
        Ok(Ok(h)) => h,
        Ok(Err(e)) => {
            let _ = thread.join();
            return Err(e.into());
        }
        Err(_) => {
            let _ = thread.join();
            return Err(HarnessError::Aborted("agent scheduler failed to start".into()));
        }
    };
    Ok(AgentSet {
        endpoints,
        configs: configs.to_vec(),
        handle,
        tid,
        shutdown: Some(stop_tx),
        thread: Some(thread),
    })
}
