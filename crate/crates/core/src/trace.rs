//! Execution traces: one record per action or monitor decision, each carrying
//! the digest of the world state right after it.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::DumpError;
use crate::lang::parser::{parse_action, parse_term};
use crate::lang::scenario::Scenario;
use crate::sitcalc::{progress, WorldState};
use crate::term::{Atom, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Start,
    PmsAction,
    ServiceAction,
    Exogenous,
    Discrepancy,
    RecoveryPlan,
    Note,
    Finish,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Start => "start",
            RecordKind::PmsAction => "pms-action",
            RecordKind::ServiceAction => "service-action",
            RecordKind::Exogenous => "exogenous",
            RecordKind::Discrepancy => "discrepancy",
            RecordKind::RecoveryPlan => "recovery-plan",
            RecordKind::Note => "note",
            RecordKind::Finish => "finish",
        }
    }

    /// Records whose payload `action` changes the state.
    pub fn is_action(self) -> bool {
        matches!(self, RecordKind::PmsAction | RecordKind::ServiceAction | RecordKind::Exogenous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Position in the trace, from 0.
    pub step: usize,
    pub tick: u64,
    pub kind: RecordKind,
    pub payload: Value,
    pub digest: String,
}

impl TraceRecord {
    pub fn action(&self) -> Option<&str> {
        self.payload.get("action").and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Json,
    Text,
}

pub fn to_ndjson(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

pub fn from_ndjson(text: &str) -> Result<Vec<TraceRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

fn summary(payload: &Value) -> String {
    match payload {
        Value::Object(m) => {
            if let Some(a) = m.get("action").and_then(Value::as_str) {
                return a.to_string();
            }
            let mut s = String::new();
            for (k, v) in m {
                if !s.is_empty() {
                    s.push(' ');
                }
                match v {
                    Value::String(x) => write!(s, "{k}={x}").unwrap(),
                    other => write!(s, "{k}={other}").unwrap(),
                }
            }
            s
        }
        other => other.to_string(),
    }
}

pub fn to_text(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        writeln!(out, "{:>5} {:>5} {:<14} {} [{}]", r.step, r.tick, r.kind.as_str(), summary(&r.payload), r.digest).unwrap();
    }
    out
}

pub fn render(records: &[TraceRecord], format: TraceFormat) -> String {
    match format {
        TraceFormat::Json => to_ndjson(records),
        TraceFormat::Text => to_text(records),
    }
}

/// Parses a state dump: one ground atom per line, `%` comments allowed.
pub fn parse_dump(text: &str) -> Result<BTreeSet<Atom>, DumpError> {
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let t = parse_term(line).map_err(|e| DumpError::Malformed(i + 1, e.to_string()))?;
        let atom = match t {
            Term::Sym(n) => Atom::new(n, vec![]),
            Term::App(n, args) if args.iter().all(Term::is_ground) => Atom::new(n, args),
            other => return Err(DumpError::Malformed(i + 1, format!("`{other}` is not a ground atom"))),
        };
        out.insert(atom);
    }
    Ok(out)
}

/// Re-executes the recorded actions from the initial state and checks every digest.
pub fn replay(scn: &Scenario, records: &[TraceRecord]) -> Result<WorldState, String> {
    let mut state = scn.initial_state();
    for (i, r) in records.iter().enumerate() {
        if r.kind.is_action() {
            let text = r.action().ok_or_else(|| format!("record {i}: missing action"))?;
            let a = parse_action(text).map_err(|e| format!("record {i}: {e}"))?;
            state = progress(&scn.domain, &state, &a).map_err(|e| format!("record {i}: {e}"))?;
        }
        if state.digest() != r.digest {
            return Err(format!(
                "record {i} ({}): digest {} does not match replayed state {}",
                r.kind.as_str(),
                r.digest,
                state.digest()
            ));
        }
    }
    Ok(state)
}
