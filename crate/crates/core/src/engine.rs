//! The online execution loop.
//!
//! Each iteration first handles pending events. Service reports update the
//! state directly; consecutive exogenous events are aligned as one batch and
//! handed to the monitor. Otherwise the engine takes the first available
//! transition of the program, or waits for the environment.

use log::{debug, info, warn};
use serde_json::json;

use crate::interp::Interpreter;
use crate::lang::ast::Program;
use crate::lang::scenario::Scenario;
use crate::monitor::{Monitor, MonitorOutcome, RecoveryPlan};
use crate::sim::EnvironmentPort;
use crate::sitcalc::{progress, Domain, WorldState};
use crate::term::ActionInstance;
use crate::trace::{RecordKind, TraceRecord};

pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub search_bound: u32,
    pub max_steps: usize,
}

impl EngineConfig {
    pub fn for_scenario(scn: &Scenario) -> Self {
        EngineConfig { search_bound: scn.search_bound, max_steps: DEFAULT_MAX_STEPS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// Not final, no transition, and the environment has nothing more to send.
    ProcessStuck,
    UnrecoverableDiscrepancy,
    StepBudgetExhausted,
    Error(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::Error(_) => 1,
            Outcome::ProcessStuck => 2,
            Outcome::UnrecoverableDiscrepancy => 3,
            Outcome::StepBudgetExhausted => 5,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::ProcessStuck => "process-stuck",
            Outcome::UnrecoverableDiscrepancy => "unrecoverable-discrepancy",
            Outcome::StepBudgetExhausted => "step-budget-exhausted",
            Outcome::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: Vec<TraceRecord>,
    pub outcome: Outcome,
    pub state: WorldState,
    pub program: Program,
    pub plans: Vec<RecoveryPlan>,
    pub ticks: u64,
}

impl RunReport {
    pub fn discrepancies(&self) -> usize {
        self.trace.iter().filter(|r| r.kind == RecordKind::Discrepancy).count()
    }

    pub fn actions(&self, kind: RecordKind) -> Vec<String> {
        self.trace.iter().filter(|r| r.kind == kind).filter_map(|r| r.action().map(str::to_string)).collect()
    }
}

struct Run<'a> {
    domain: &'a Domain,
    state: WorldState,
    program: Program,
    trace: Vec<TraceRecord>,
    plans: Vec<RecoveryPlan>,
    monitor: Monitor,
}

impl Run<'_> {
    fn record(&mut self, tick: u64, kind: RecordKind, payload: serde_json::Value) {
        self.trace.push(TraceRecord {
            step: self.trace.len(),
            tick,
            kind,
            payload,
            digest: self.state.digest(),
        });
    }

    fn apply(&mut self, tick: u64, kind: RecordKind, a: &ActionInstance) -> Result<(), String> {
        self.state = progress(self.domain, &self.state, a).map_err(|e| e.to_string())?;
        self.record(tick, kind, json!({ "action": a.to_string() }));
        Ok(())
    }

    /// Returns `false` if the batch left an unrecoverable discrepancy.
    fn exogenous_batch(&mut self, tick: u64, batch: &[ActionInstance]) -> Result<bool, String> {
        let expected = self.state.clone();
        for e in batch {
            self.apply(tick, RecordKind::Exogenous, e)?;
        }
        let events: Vec<String> = batch.iter().map(|e| e.to_string()).collect();
        let outcome = self.monitor.step(self.domain, &expected, &self.program, batch).map_err(|e| e.to_string())?;
        match outcome {
            MonitorOutcome::Irrelevant(_) => {
                debug!("irrelevant exogenous events {events:?}");
                self.record(tick, RecordKind::Note, json!({ "message": "irrelevant exogenous events", "events": events }));
                Ok(true)
            }
            MonitorOutcome::Recovered { plan, program, .. } => {
                let (added, removed) = diff(&expected, &self.state);
                info!("discrepancy after {events:?}; recovery prefix {}", plan.prefix);
                self.record(
                    tick,
                    RecordKind::Discrepancy,
                    json!({ "events": events, "expected": expected.digest(), "added": added, "removed": removed }),
                );
                let items: Vec<String> = plan.items.iter().map(|(s, w)| format!("{s}:{}", w.as_term())).collect();
                self.record(
                    tick,
                    RecordKind::RecoveryPlan,
                    json!({ "prefix": plan.prefix.to_string(), "items": items, "nodes": plan.stats.nodes }),
                );
                self.program = program;
                self.plans.push(plan);
                Ok(true)
            }
            MonitorOutcome::Unrecoverable(d) => {
                let (added, removed) = diff(&d.expected, &d.actual);
                warn!("no recovery plan within bound {} for {events:?}", self.monitor.bound);
                self.record(
                    tick,
                    RecordKind::Discrepancy,
                    json!({ "events": events, "expected": d.expected.digest(), "added": added, "removed": removed, "recoverable": false }),
                );
                Ok(false)
            }
        }
    }

    /// Returns `false` on an unrecoverable discrepancy.
    fn handle_events(&mut self, tick: u64, events: Vec<ActionInstance>) -> Result<bool, String> {
        let mut batch = Vec::new();
        for e in events {
            if self.domain.is_exogenous(&e.name) {
                batch.push(e);
                continue;
            }
            if !batch.is_empty() && !self.exogenous_batch(tick, &std::mem::take(&mut batch))? {
                return Ok(false);
            }
            self.apply(tick, RecordKind::ServiceAction, &e)?;
        }
        if !batch.is_empty() {
            return self.exogenous_batch(tick, &batch);
        }
        Ok(true)
    }
}

fn diff(expected: &WorldState, actual: &WorldState) -> (Vec<String>, Vec<String>) {
    let added = actual.fluents.difference(&expected.fluents).map(|a| a.to_string()).collect();
    let removed = expected.fluents.difference(&actual.fluents).map(|a| a.to_string()).collect();
    (added, removed)
}

/// Executes the scenario's process online against `port`.
pub fn run(scn: &Scenario, port: &mut dyn EnvironmentPort, cfg: &EngineConfig) -> RunReport {
    let mut r = Run {
        domain: &scn.domain,
        state: scn.initial_state(),
        program: scn.process.clone(),
        trace: Vec::new(),
        plans: Vec::new(),
        monitor: Monitor::new(cfg.search_bound),
    };
    r.record(port.tick(), RecordKind::Start, json!({ "process": scn.process.to_string() }));
    let interp = Interpreter::new(&scn.domain);
    let mut steps = 0usize;
    let outcome = loop {
        let events = port.pull();
        if !events.is_empty() {
            match r.handle_events(port.tick(), events) {
                Ok(true) => continue,
                Ok(false) => break Outcome::UnrecoverableDiscrepancy,
                Err(e) => break Outcome::Error(e),
            }
        }
        if steps >= cfg.max_steps {
            break Outcome::StepBudgetExhausted;
        }
        steps += 1;
        match interp.is_final(&r.program, &r.state) {
            Ok(true) => break Outcome::Completed,
            Ok(false) => {}
            Err(e) => break Outcome::Error(e.to_string()),
        }
        let ts = match interp.trans(&r.program, &r.state) {
            Ok(ts) => ts,
            Err(e) => break Outcome::Error(e.to_string()),
        };
        match ts.into_iter().next() {
            Some(t) => {
                r.program = t.next;
                if let Some(a) = t.action {
                    let tick = port.tick();
                    if let Err(e) = r.apply(tick, RecordKind::PmsAction, &a) {
                        break Outcome::Error(e);
                    }
                    port.push(&a);
                }
            }
            None => {
                if !port.wait() {
                    break Outcome::ProcessStuck;
                }
            }
        }
    };
    let mut payload = json!({ "outcome": outcome.label(), "ticks": port.tick() });
    if let Outcome::Error(e) = &outcome {
        payload["error"] = json!(e);
    }
    r.record(port.tick(), RecordKind::Finish, payload);
    RunReport { trace: r.trace, outcome, state: r.state, program: r.program, plans: r.plans, ticks: port.tick() }
}
