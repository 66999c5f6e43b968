//! Execution monitoring: aligning exogenous events, deciding relevance and
//! planning a recovery prefix.

use std::collections::BTreeSet;

use crate::error::InterpError;
use crate::interp::{Interpreter, Responder, SearchStats};
use crate::lang::ast::{Formula, Program};
use crate::lifecycle::{pick_service, worklist_term, WorkItem, MANAGE_EXECUTION};
use crate::sitcalc::{progress, same_state, Domain, WorldState, START};
use crate::term::{ActionInstance, Term};

/// Every recovery invocation is assign, ready, start, finished, ack, release.
pub const ACTIONS_PER_INVOCATION: usize = 6;

const PLAN_ID: &str = "rec";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub expected: WorldState,
    pub actual: WorldState,
    pub events: Vec<ActionInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryPlan {
    /// Service and work item of each invocation, in execution order.
    pub items: Vec<(Term, WorkItem)>,
    /// Sequential `manageExecution` calls with fresh item ids.
    pub prefix: Program,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonitorOutcome {
    /// The events changed nothing the process relies on.
    Irrelevant(WorldState),
    Recovered { plan: RecoveryPlan, program: Program, state: WorldState },
    Unrecoverable(Discrepancy),
}

/// Progresses `state` through the observed exogenous events.
pub fn align(domain: &Domain, state: &WorldState, events: &[ActionInstance]) -> Result<WorldState, InterpError> {
    let mut s = state.clone();
    for e in events {
        s = progress(domain, &s, e)?;
    }
    Ok(s)
}

pub fn relevant(expected: &WorldState, actual: &WorldState) -> bool {
    !same_state(expected, actual)
}

/// `star(ndet(task choices...), bound)` where each choice picks an input and
/// then runs a one-item worklist with id `rec` on a capable available service.
pub fn recovery_program(domain: &Domain, bound: u32) -> Program {
    let branches: Vec<(Formula, Program)> = domain
        .tasks
        .iter()
        .map(|t| {
            let input = if t.input_sort.is_some() { Term::var("_i") } else { Term::none() };
            let item = WorkItem { task: t.name.clone(), id: PLAN_ID.into(), input };
            let body = pick_service("_s", worklist_term(&[item]));
            let body = match &t.input_sort {
                Some(sort) => Program::Pick("_i".into(), sort.clone(), Box::new(body)),
                None => body,
            };
            (Formula::True, body)
        })
        .collect();
    Program::Star(Box::new(Program::Choice(branches)), bound)
}

/// Shortest sequence of at most `bound` work items leading from `actual` back
/// to a state equal to `expected`, assuming services behave nominally.
pub fn recover(
    domain: &Domain,
    expected: &WorldState,
    actual: &WorldState,
    bound: u32,
    fresh_id: &mut dyn FnMut() -> String,
) -> Result<Option<RecoveryPlan>, InterpError> {
    if same_state(expected, actual) {
        return Ok(Some(RecoveryPlan { items: vec![], prefix: Program::Nil, stats: SearchStats::default() }));
    }
    if domain.tasks.is_empty() {
        return Ok(None);
    }
    let ids: BTreeSet<Term> = [Term::sym(PLAN_ID)].into_iter().collect();
    let interp = Interpreter::new(domain).with_responder(Responder::Only(ids));
    let program = recovery_program(domain, bound);
    let target = expected.snapshot();
    let accept = move |_: &Interpreter, _: &Program, s: &WorldState| Ok(same_state(s, &target));
    let max_len = bound as usize * ACTIONS_PER_INVOCATION;
    let (found, stats) = interp.search(&program, actual, max_len, &accept)?;
    let Some(plan) = found else { return Ok(None) };
    let items: Vec<(Term, WorkItem)> = plan
        .actions
        .iter()
        .filter(|a| a.name == START)
        .map(|a| {
            let task = a.args[1].as_sym().unwrap_or_default();
            (a.args[0].clone(), WorkItem::new(task, fresh_id(), a.args[3].clone()))
        })
        .collect();
    let prefix = Program::seq_all(
        items.iter().map(|(s, w)| {
            Program::ProcCall(MANAGE_EXECUTION.into(), vec![worklist_term(std::slice::from_ref(w)), s.clone()])
        }),
    );
    Ok(Some(RecoveryPlan { items, prefix, stats }))
}

/// Only holds the recovery bound and the id counter for recovery items.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub bound: u32,
    next_id: usize,
}

impl Monitor {
    pub fn new(bound: u32) -> Self {
        Monitor { bound, next_id: 1 }
    }

    /// Handles a batch of exogenous events observed in `expected`.
    pub fn step(
        &mut self,
        domain: &Domain,
        expected: &WorldState,
        program: &Program,
        events: &[ActionInstance],
    ) -> Result<MonitorOutcome, InterpError> {
        let actual = align(domain, expected, events)?;
        if !relevant(expected, &actual) {
            return Ok(MonitorOutcome::Irrelevant(actual));
        }
        let mut counter = self.next_id;
        let mut fresh = || {
            let id = format!("{PLAN_ID}{counter}");
            counter += 1;
            id
        };
        let plan = recover(domain, expected, &actual, self.bound, &mut fresh)?;
        self.next_id = counter;
        Ok(match plan {
            Some(plan) => {
                let program = Program::seq(plan.prefix.clone(), program.clone());
                MonitorOutcome::Recovered { plan, program, state: actual }
            }
            None => MonitorOutcome::Unrecoverable(Discrepancy {
                expected: expected.clone(),
                actual,
                events: events.to_vec(),
            }),
        })
    }
}

/// `(p, s1)` and `(p, s2)` agree on finality and on the labels of their
/// transitions, recursively up to `depth` steps.
pub fn check_bisimulation(
    interp: &Interpreter,
    p: &Program,
    s1: &WorldState,
    s2: &WorldState,
    depth: usize,
) -> Result<bool, InterpError> {
    if interp.is_final(p, s1)? != interp.is_final(p, s2)? {
        return Ok(false);
    }
    let t1 = interp.trans(p, s1)?;
    let t2 = interp.trans(p, s2)?;
    if t1 != t2 {
        return Ok(false);
    }
    if depth == 0 {
        return Ok(true);
    }
    for t in t1 {
        let (n1, n2) = match &t.action {
            Some(a) => (progress(interp.domain, s1, a)?, progress(interp.domain, s2, a)?),
            None => (s1.clone(), s2.clone()),
        };
        if !check_bisimulation(interp, &t.next, &n1, &n2, depth - 1)? {
            return Ok(false);
        }
    }
    Ok(true)
}
