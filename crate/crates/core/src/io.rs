//! File formats: sample and resource CSVs, delay lists and trace CSVs.
//!
//! Numbers are written with Rust's shortest round-trip decimal formatting,
//! which never uses exponent notation.

use std::io::{BufRead, Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{Activity, Entity, MetricSample, ResourceSample, Status};
use crate::scalar::Scalar;
use crate::sim::DistortionTrace;

pub const SAMPLE_HEADER: [&str; 9] = [
    "run_id",
    "timestamp_s",
    "agent_id",
    "activity",
    "attr_count",
    "delay_s",
    "req_bytes",
    "resp_bytes",
    "status",
];

pub const RESOURCE_HEADER: [&str; 5] = ["run_id", "timestamp_s", "entity", "cpu_fraction", "mem_bytes"];

pub const TRACE_HEADER: [&str; 4] = ["t", "real", "observed", "error"];

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(e.to_string())
}

fn activity_str(a: Activity) -> &'static str {
    match a {
        Activity::Poll => "poll",
        Activity::Task => "task",
    }
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Timeout => "timeout",
        Status::Error => "error",
    }
}

pub fn write_samples<W: Write>(out: W, run_id: &str, samples: &[MetricSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_HEADER).map_err(csv_err)?;
    for s in samples {
        w.write_record([
            run_id.to_string(),
            s.timestamp.to_string(),
            s.agent_id.clone(),
            activity_str(s.activity).to_string(),
            s.attribute_count.to_string(),
            s.delay.map(|d| d.to_string()).unwrap_or_default(),
            s.request_bytes.to_string(),
            s.response_bytes.to_string(),
            status_str(s.status).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    run_id: String,
    timestamp_s: f64,
    agent_id: String,
    activity: Activity,
    attr_count: u32,
    delay_s: Option<f64>,
    req_bytes: u64,
    resp_bytes: u64,
    status: Status,
}

/// Reads a sample CSV, returning `(run_id, sample)` rows.
pub fn read_samples<R: Read>(input: R) -> Result<Vec<(String, MetricSample)>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SAMPLE_HEADER) {
        return Err(Error::Parse(format!("unexpected sample header {header:?}")));
    }
    r.deserialize::<SampleRow>()
        .map(|row| {
            let row = row.map_err(csv_err)?;
            let sample = MetricSample {
                timestamp: row.timestamp_s,
                agent_id: row.agent_id,
                activity: row.activity,
                attribute_count: row.attr_count,
                delay: row.delay_s,
                request_bytes: row.req_bytes,
                response_bytes: row.resp_bytes,
                status: row.status,
            };
            sample.validate()?;
            Ok((row.run_id, sample))
        })
        .collect()
}

pub fn write_resources<W: Write>(out: W, run_id: &str, rows: &[ResourceSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESOURCE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            run_id.to_string(),
            r.timestamp.to_string(),
            r.entity.as_str().to_string(),
            r.cpu_fraction.to_string(),
            r.memory_bytes.map(|m| m.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Debug, Deserialize)]
struct ResourceRow {
    #[allow(dead_code)]
    run_id: String,
    timestamp_s: f64,
    entity: Entity,
    cpu_fraction: f64,
    mem_bytes: Option<u64>,
}

pub fn read_resources<R: Read>(input: R) -> Result<Vec<ResourceSample>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RESOURCE_HEADER) {
        return Err(Error::Parse(format!("unexpected resource header {header:?}")));
    }
    r.deserialize::<ResourceRow>()
        .map(|row| {
            let row = row.map_err(csv_err)?;
            let s = ResourceSample {
                timestamp: row.timestamp_s,
                entity: row.entity,
                cpu_fraction: row.cpu_fraction,
                memory_bytes: row.mem_bytes,
            };
            s.validate()?;
            Ok(s)
        })
        .collect()
}

/// Reads delays from either a plain list (one decimal per line; blank lines
/// and `#` comments skipped) or a sample CSV, in which case the `delay_s`
/// column of ok rows is used.
pub fn read_delays<R: BufRead>(mut input: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(io_err)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.split(',').any(|c| c.trim() == "delay_s") {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let delay_col = col("delay_s").expect("checked above");
        let status_col = col("status");
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            if let Some(sc) = status_col {
                if rec.get(sc) != Some("ok") {
                    continue;
                }
            }
            let v = rec.get(delay_col).unwrap_or("").trim();
            out.push(
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("delay {v:?}: {e}")))?,
            );
        }
        return Ok(out);
    }
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {l:?}: {e}", i + 1)))
        })
        .collect()
}

pub fn write_delays<W: Write>(mut out: W, delays: &[f64]) -> Result<()> {
    for d in delays {
        writeln!(out, "{d}").map_err(io_err)?;
    }
    Ok(())
}

pub fn write_trace<T: Scalar, W: Write>(out: W, trace: &DistortionTrace<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for i in 0..trace.len() {
        w.write_record([
            trace.times[i].to_string(),
            trace.real_aggregate[i].to_string(),
            trace.observed_aggregate[i].to_string(),
            trace.per_point_error[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads `(t, real, observed, error)` rows.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<[f64; 4]>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse(format!("unexpected trace header {header:?}")));
    }
    r.deserialize::<[f64; 4]>()
        .map(|row| row.map_err(csv_err))
        .collect()
}
