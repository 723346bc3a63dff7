//! Benchmark plans and their flat `key = value` text form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use monlab_core::dist::DelayModel;
use serde::{Deserialize, Serialize};

use crate::agent::ValueModel;
use crate::error::{HarnessError, Result};
use crate::workload::WorkloadConfig;

const REQUIRED: [&str; 7] = [
    "agent_count",
    "poll_rate",
    "attributes_per_poll",
    "duration_s",
    "delay_tolerance_s",
    "round_timeout_s",
    "seed",
];

const WORKLOAD_KEYS: [&str; 4] = [
    "workload.task_rate",
    "workload.task_size",
    "workload.task_deadline_s",
    "workload.colocated",
];

// Harness knobs beyond the core plan; all optional.
const EXTRA_KEYS: [&str; 6] = [
    "agent.service_delay",
    "agent.value_model",
    "agent.attribute_count",
    "agent.base_port",
    "resource_interval_s",
    "factor",
];

/// Which plan field a run's series is indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    #[default]
    AgentCount,
    PollRate,
    AttributesPerPoll,
}

impl Factor {
    pub fn as_str(self) -> &'static str {
        match self {
            Factor::AgentCount => "agent_count",
            Factor::PollRate => "poll_rate",
            Factor::AttributesPerPoll => "attributes_per_poll",
        }
    }
}

impl std::str::FromStr for Factor {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "agent_count" => Ok(Factor::AgentCount),
            "poll_rate" => Ok(Factor::PollRate),
            "attributes_per_poll" => Ok(Factor::AttributesPerPoll),
            other => Err(HarnessError::Plan(format!("unknown factor {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub agent_count: usize,
    /// Rounds per second; every round polls every agent once.
    pub poll_rate: f64,
    pub attributes_per_poll: u32,
    /// Seconds.
    pub duration: f64,
    /// Seconds.
    pub delay_tolerance: f64,
    /// Seconds.
    pub round_timeout: f64,
    pub workload: Option<WorkloadConfig>,
    pub seed: u64,

    pub service_delay: Option<DelayModel<f64>>,
    pub value_model: ValueModel,
    /// Attributes each agent exposes; at least `attributes_per_poll`.
    pub attribute_count: u32,
    /// Agent `i` listens on `base_port + i`; ephemeral ports when absent.
    pub base_port: Option<u16>,
    /// Seconds between resource readings.
    pub resource_interval: f64,
    pub factor: Factor,
}

impl BenchPlan {
    /// A plan with the harness defaults for everything beyond the basics.
    pub fn new(agent_count: usize, poll_rate: f64, duration: f64) -> Self {
        BenchPlan {
            agent_count,
            poll_rate,
            attributes_per_poll: 1,
            duration,
            delay_tolerance: 1.0,
            round_timeout: (1.0 / poll_rate).min(1.0),
            workload: None,
            seed: 0,
            service_delay: None,
            value_model: ValueModel::Constant,
            attribute_count: 1,
            base_port: None,
            resource_interval: 1.0,
            factor: Factor::AgentCount,
        }
    }

    pub fn poll_interval(&self) -> f64 {
        1.0 / self.poll_rate
    }

    /// Rounds a full run issues.
    pub fn round_count(&self) -> usize {
        (self.duration * self.poll_rate).ceil() as usize
    }

    pub fn factor_value(&self) -> f64 {
        match self.factor {
            Factor::AgentCount => self.agent_count as f64,
            Factor::PollRate => self.poll_rate,
            Factor::AttributesPerPoll => f64::from(self.attributes_per_poll),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Plan(m));
        if self.agent_count < 1 {
            return bad("agent_count must be >= 1".into());
        }
        if self.attributes_per_poll < 1 {
            return bad("attributes_per_poll must be >= 1".into());
        }
        if self.attribute_count < self.attributes_per_poll {
            return bad(format!(
                "agent.attribute_count {} is below attributes_per_poll {}",
                self.attribute_count, self.attributes_per_poll
            ));
        }
        for (name, v) in [
            ("poll_rate", self.poll_rate),
            ("duration_s", self.duration),
            ("delay_tolerance_s", self.delay_tolerance),
            ("round_timeout_s", self.round_timeout),
            ("resource_interval_s", self.resource_interval),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if let Some(p) = self.base_port {
            if usize::from(p) + self.agent_count - 1 > usize::from(u16::MAX) {
                return bad(format!("agent.base_port {p} leaves too few ports"));
            }
        }
        if let Some(d) = &self.service_delay {
            if let DelayModel::Constant(c) = d {
                if !(c.is_finite() && *c >= 0.0) {
                    return bad(format!("agent.service_delay must be >= 0, got {c}"));
                }
            }
        }
        if let Some(w) = &self.workload {
            w.validate()?;
        }
        Ok(())
    }

    /// Non-fatal remarks about the plan.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.round_timeout > self.poll_interval() {
            out.push(format!(
                "round_timeout_s {} exceeds the poll interval {}; rounds may back up",
                self.round_timeout,
                self.poll_interval()
            ));
        }
        out
    }

    /// Parses the flat text form: one `key = value` per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::Plan(format!("line {}: expected `key = value`", no + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !REQUIRED.contains(&k) && !WORKLOAD_KEYS.contains(&k) && !EXTRA_KEYS.contains(&k) {
                return Err(HarnessError::Plan(format!("unknown key {k:?}")));
            }
            if kv.insert(k, v).is_some() {
                return Err(HarnessError::Plan(format!("duplicate key {k:?}")));
            }
        }
        for k in REQUIRED {
            if !kv.contains_key(k) {
                return Err(HarnessError::Plan(format!("missing key {k:?}")));
            }
        }

        fn num<T: std::str::FromStr>(kv: &BTreeMap<&str, &str>, k: &str) -> Result<Option<T>> {
            kv.get(k)
                .map(|v| {
                    v.parse::<T>()
                        .map_err(|_| HarnessError::Plan(format!("key {k:?}: cannot parse {v:?}")))
                })
                .transpose()
        }
        let req = |k: &str| -> Result<f64> { Ok(num::<f64>(&kv, k)?.expect("checked above")) };

        let workload = if WORKLOAD_KEYS.iter().any(|k| kv.contains_key(k)) {
            let need = |k: &str| -> Result<f64> {
                num::<f64>(&kv, k)?.ok_or_else(|| HarnessError::Plan(format!("missing key {k:?}")))
            };
            Some(WorkloadConfig {
                task_rate: need("workload.task_rate")?,
                task_size: need("workload.task_size")?,
                task_deadline: need("workload.task_deadline_s")?,
                colocated: num::<bool>(&kv, "workload.colocated")?.unwrap_or(false),
            })
        } else {
            None
        };

        let attributes_per_poll = num::<u32>(&kv, "attributes_per_poll")?.expect("checked above");
        let plan = BenchPlan {
            agent_count: num::<usize>(&kv, "agent_count")?.expect("checked above"),
            poll_rate: req("poll_rate")?,
            attributes_per_poll,
            duration: req("duration_s")?,
            delay_tolerance: req("delay_tolerance_s")?,
            round_timeout: req("round_timeout_s")?,
            workload,
            seed: num::<u64>(&kv, "seed")?.expect("checked above"),
            service_delay: kv
                .get("agent.service_delay")
                .map(|v| v.parse::<DelayModel<f64>>())
                .transpose()?,
            value_model: kv
                .get("agent.value_model")
                .map(|v| v.parse())
                .transpose()?
                .unwrap_or(ValueModel::Constant),
            attribute_count: num::<u32>(&kv, "agent.attribute_count")?.unwrap_or(attributes_per_poll),
            base_port: num::<u16>(&kv, "agent.base_port")?,
            resource_interval: num::<f64>(&kv, "resource_interval_s")?.unwrap_or(1.0),
            factor: kv.get("factor").map(|v| v.parse()).transpose()?.unwrap_or_default(),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Canonical text form; `parse(to_text())` gives back the same plan.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("agent_count", &self.agent_count);
        line("poll_rate", &self.poll_rate);
        line("attributes_per_poll", &self.attributes_per_poll);
        line("duration_s", &self.duration);
        line("delay_tolerance_s", &self.delay_tolerance);
        line("round_timeout_s", &self.round_timeout);
        line("seed", &self.seed);
        if let Some(w) = &self.workload {
            line("workload.task_rate", &w.task_rate);
            line("workload.task_size", &w.task_size);
            line("workload.task_deadline_s", &w.task_deadline);
            line("workload.colocated", &w.colocated);
        }
        if let Some(d) = &self.service_delay {
            line("agent.service_delay", d);
        }
        line("agent.value_model", &self.value_model);
        line("agent.attribute_count", &self.attribute_count);
        if let Some(p) = self.base_port {
            line("agent.base_port", &p);
        }
        line("resource_interval_s", &self.resource_interval);
        line("factor", &self.factor.as_str());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# smoke plan
agent_count = 4
poll_rate = 10
attributes_per_poll = 2
duration_s = 5
delay_tolerance_s = 0.5
round_timeout_s = 0.1
seed = 7
";

    #[test]
    fn parses_required_keys() {
        let p = BenchPlan::parse(BASIC).unwrap();
        assert_eq!(p.agent_count, 4);
        assert_eq!(p.attributes_per_poll, 2);
        assert_eq!(p.attribute_count, 2);
        assert_eq!(p.seed, 7);
        assert!(p.workload.is_none());
        assert_eq!(p.round_count(), 50);
        assert!(p.warnings().is_empty());
    }

    #[test]
    fn missing_key_is_named() {
        let text = BASIC.replace("seed = 7\n", "");
        let e = BenchPlan::parse(&text).unwrap_err().to_string();
        assert!(e.contains("\"seed\""), "{e}");
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(BenchPlan::parse(&format!("{BASIC}bogus = 1\n"))
            .unwrap_err()
            .to_string()
            .contains("bogus"));
        assert!(BenchPlan::parse(&format!("{BASIC}seed = 8\n"))
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }

    #[test]
    fn partial_workload_names_missing_key() {
        let e = BenchPlan::parse(&format!("{BASIC}workload.task_rate = 5\n"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("workload.task_size"), "{e}");
    }

    #[test]
    fn text_round_trip() {
        let text = format!(
            "{BASIC}workload.task_rate = 20\nworkload.task_size = 1.5\n\
             workload.task_deadline_s = 0.01\nworkload.colocated = true\n\
             agent.service_delay = const:0.005\nagent.value_model = walk:0.5\n\
             agent.base_port = 41000\nfactor = poll_rate\n"
        );
        let p = BenchPlan::parse(&text).unwrap();
        assert_eq!(p.service_delay, Some(DelayModel::Constant(0.005)));
        assert_eq!(p.factor_value(), 10.0);
        assert_eq!(BenchPlan::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn slow_timeout_warns() {
        let p = BenchPlan::parse(&BASIC.replace("round_timeout_s = 0.1", "round_timeout_s = 0.5"))
            .unwrap();
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn rejects_invalid_values() {
        assert!(BenchPlan::parse(&BASIC.replace("agent_count = 4", "agent_count = 0")).is_err());
        assert!(BenchPlan::parse(&BASIC.replace("poll_rate = 10", "poll_rate = -1")).is_err());
        assert!(BenchPlan::parse(&BASIC.replace("seed = 7", "seed = x")).is_err());
    }
}
