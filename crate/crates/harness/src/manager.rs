//! The polling manager: one persistent connection per agent, rounds of
//! concurrent GETs closed at a deadline.

use std::net::SocketAddr;
use std::time::{Duration, Instant};

use futures::future::join_all;
use monlab_core::metrics::{MetricSample, Status};
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;
use tokio::runtime::Runtime;
use tokio::time::timeout_at;

use crate::agent::attribute_id;
use crate::error::Result;
use crate::wire::{encode_get, Response, MAX_LINE};

/// Thread name the bench runner gives the manager; resource accounting keys on it.
pub const MANAGER_THREAD: &str = "monlab-manager";

struct Connection {
    reader: BufReader<OwnedReadHalf>,
    writer: OwnedWriteHalf,
}

struct AgentLink {
    agent_id: String,
    addr: SocketAddr,
    conn: Option<Connection>,
}

enum Outcome {
    Ok { delay: f64, response_bytes: u64 },
    Failed(Status),
}

impl AgentLink {
    async fn exchange(&mut self, request: &str, expected: usize) -> std::io::Result<Outcome> {
        if self.conn.is_none() {
            let stream = TcpStream::connect(self.addr).await?;
            stream.set_nodelay(true)?;
            let (r, w) = stream.into_split();
            self.conn = Some(Connection {
                reader: BufReader::new(r),
                writer: w,
            });
        }
        let conn = self.conn.as_mut().expect("connected above");
        let sent = Instant::now();
        conn.writer.write_all(request.as_bytes()).await?;
        let mut line = String::new();
        let n = (&mut conn.reader)
            .take(MAX_LINE as u64)
            .read_line(&mut line)
            .await?;
        let delay = sent.elapsed().as_secs_f64();
        if n == 0 {
            return Err(std::io::ErrorKind::UnexpectedEof.into());
        }
        Ok(match Response::parse(&line) {
            Ok(Response::Values(v)) if v.len() == expected => Outcome::Ok {
                delay,
                response_bytes: line.len() as u64,
            },
            _ => Outcome::Failed(Status::Error),
        })
    }
}

/// Polls a fixed set of agents. Runs its own single-threaded scheduler on
/// the calling thread.
pub struct Manager {
    rt: Runtime,
    links: Vec<AgentLink>,
    epoch: Instant,
    stored_bytes: u64,
}

impl Manager {
    pub fn new(targets: &[(String, SocketAddr)]) -> Result<Self> {
        Self::with_epoch(targets, Instant::now())
    }

    /// Sample timestamps are seconds since `epoch`.
    pub fn with_epoch(targets: &[(String, SocketAddr)], epoch: Instant) -> Result<Self> {
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()?;
        Ok(Manager {
            rt,
            links: targets
                .iter()
                .map(|(id, addr)| AgentLink {
                    agent_id: id.clone(),
                    addr: *addr,
                    conn: None,
                })
                .collect(),
            epoch,
            stored_bytes: 0,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.links.len()
    }

    /// Response bytes retained from ok polls so far.
    pub fn stored_bytes(&self) -> u64 {
        self.stored_bytes
    }

    /// Opens every connection ahead of the first round; failures are left for
    /// the rounds to report.
    pub fn connect_all(&mut self, timeout: Duration) {
        let links = &mut self.links;
        self.rt.block_on(async {
            join_all(links.iter_mut().map(|link| async move {
                if let Ok(Ok(stream)) =
                    tokio::time::timeout(timeout, TcpStream::connect(link.addr)).await
                {
                    if stream.set_nodelay(true).is_ok() {
                        let (r, w) = stream.into_split();
                        link.conn = Some(Connection {
                            reader: BufReader::new(r),
                            writer: w,
                        });
                    }
                }
            }))
            .await;
        });
    }

    /// One GET per agent, all in flight together. Agents that have not
    /// answered by `timeout` yield `timeout` samples and their connection is
    /// dropped so a late answer cannot leak into the next round.
    pub fn poll_round(&mut self, attributes_per_poll: u32, timeout: Duration) -> Vec<MetricSample> {
        if self.links.is_empty() {
            return Vec::new();
        }
        let ids: Vec<String> = (0..attributes_per_poll.max(1)).map(attribute_id).collect();
        let request = encode_get(&ids).expect("generated ids are valid");
        let expected = ids.len();
        let epoch = self.epoch;
        let deadline = tokio::time::Instant::now() + timeout;
        let links = &mut self.links;
        let mut samples = self.rt.block_on(async {
            join_all(links.iter_mut().map(|link| {
                let request = request.as_str();
                async move {
                    let ts = epoch.elapsed().as_secs_f64();
                    let outcome = match timeout_at(deadline, link.exchange(request, expected)).await {
                        Ok(Ok(o)) => o,
                        Ok(Err(_)) => {
                            link.conn = None;
                            Outcome::Failed(Status::Error)
                        }
                        Err(_) => {
                            link.conn = None;
                            Outcome::Failed(Status::Timeout)
                        }
                    };
                    let req_bytes = request.len() as u64;
                    match outcome {
                        Outcome::Ok { delay, response_bytes } => MetricSample::ok(
                            ts,
                            link.agent_id.clone(),
                            expected as u32,
                            delay,
                            req_bytes,
                            response_bytes,
                        ),
                        Outcome::Failed(status) => MetricSample::failed(
                            ts,
                            link.agent_id.clone(),
                            expected as u32,
                            req_bytes,
                            status,
                        ),
                    }
                }
            }))
            .await
        });
        samples.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        self.stored_bytes += samples
            .iter()
            .filter(|s| s.is_ok())
            .map(|s| s.response_bytes)
            .sum::<u64>();
        samples
    }
}
