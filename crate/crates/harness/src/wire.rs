//! Line-oriented text protocol between manager and agents.
//!
//! ```text
//! GET <attr_id>[,<attr_id>]*\n
//! VAL <attr_id>=<decimal>[,<attr_id>=<decimal>]*\n
//! ERR <message>\n
//! ```
//!
//! ASCII only, `\n` terminated, no `\r`. One outstanding request per connection.

use std::fmt::Write as _;

use crate::error::{HarnessError, Result};

/// Longest line either side will accept.
pub const MAX_LINE: usize = 64 * 1024;

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_graphic() && b != b',' && b != b'=')
}

fn protocol(msg: impl Into<String>) -> HarnessError {
    HarnessError::Protocol(msg.into())
}

fn strip_newline(line: &str) -> Result<&str> {
    let body = line
        .strip_suffix('\n')
        .ok_or_else(|| protocol("line not terminated by \\n"))?;
    if body.contains('\r') || body.contains('\n') {
        return Err(protocol("stray line terminator"));
    }
    if !body.is_ascii() {
        return Err(protocol("non-ASCII line"));
    }
    Ok(body)
}

pub fn encode_get<S: AsRef<str>>(ids: &[S]) -> Result<String> {
    if ids.is_empty() {
        return Err(protocol("GET needs at least one attribute"));
    }
    let mut out = String::from("GET ");
    for (i, id) in ids.iter().enumerate() {
        let id = id.as_ref();
        if !valid_id(id) {
            return Err(protocol(format!("invalid attribute id {id:?}")));
        }
        if i > 0 {
            out.push(',');
        }
        out.push_str(id);
    }
    out.push('\n');
    Ok(out)
}

pub fn parse_get(line: &str) -> Result<Vec<String>> {
    let body = strip_newline(line)?;
    let list = body
        .strip_prefix("GET ")
        .ok_or_else(|| protocol(format!("expected GET, got {body:?}")))?;
    list.split(',')
        .map(|id| {
            if valid_id(id) {
                Ok(id.to_string())
            } else {
                Err(protocol(format!("invalid attribute id {id:?}")))
            }
        })
        .collect()
}

/// An agent's reply.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Values(Vec<(String, f64)>),
    Err(String),
}

impl Response {
    pub fn encode(&self) -> Result<String> {
        match self {
            Response::Values(values) => {
                if values.is_empty() {
                    return Err(protocol("VAL needs at least one attribute"));
                }
                let mut out = String::from("VAL ");
                for (i, (id, v)) in values.iter().enumerate() {
                    if !valid_id(id) {
                        return Err(protocol(format!("invalid attribute id {id:?}")));
                    }
                    if !v.is_finite() {
                        return Err(protocol(format!("non-finite value for {id}")));
                    }
                    if i > 0 {
                        out.push(',');
                    }
                    // f64 Display is plain decimal, never exponent notation.
                    let _ = write!(out, "{id}={v}");
                }
                out.push('\n');
                Ok(out)
            }
            Response::Err(msg) => {
                let clean: String = msg
                    .chars()
                    .map(|c| if c.is_ascii() && !c.is_ascii_control() { c } else { '?' })
                    .collect();
                Ok(format!("ERR {clean}\n"))
            }
        }
    }

    pub fn parse(line: &str) -> Result<Response> {
        let body = strip_newline(line)?;
        if let Some(msg) = body.strip_prefix("ERR ") {
            return Ok(Response::Err(msg.to_string()));
        }
        let list = body
            .strip_prefix("VAL ")
            .ok_or_else(|| protocol(format!("expected VAL or ERR, got {body:?}")))?;
        list.split(',')
            .map(|pair| {
                let (id, v) = pair
                    .split_once('=')
                    .ok_or_else(|| protocol(format!("expected id=value, got {pair:?}")))?;
                if !valid_id(id) {
                    return Err(protocol(format!("invalid attribute id {id:?}")));
                }
                let digits_ok = !v.is_empty()
                    && v.bytes().all(|b| b.is_ascii_digit() || b == b'.' || b == b'-');
                let value = v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| digits_ok && x.is_finite())
                    .ok_or_else(|| protocol(format!("invalid decimal {v:?}")))?;
                Ok((id.to_string(), value))
            })
            .collect::<Result<Vec<_>>>()
            .map(Response::Values)
    }
}
