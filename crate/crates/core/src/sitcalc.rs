//! Situation-calculus action theory over finite ground domains, evaluated by
//! progression: the current situation is materialized as the set of true
//! fluent atoms, and each action rewrites it through the successor-state
//! rules.
//!
//! Lifecycle fluents are built in:
//!
//! * `free(S)`: no work item is assigned to service `S`.
//! * `assigned(S,T,Id)`: `Assign` happened and `Release` has not.
//! * `enabled(S,T,Id)`: the service reported `readyToStartTask` and has not yet
//!   reported `finishedTask`.
//! * `started(S,T,Id,P)`: `Start` with input `P` happened and
//!   `AckTaskCompletion` has not.
//! * `acked(S,T,Id)`: completion acknowledged, awaiting `Release`.
//!
//! Domain fluents change through effect rules, which are compiled
//! positive/negative conditions of each fluent's successor-state axiom.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::EvalError;
use crate::lang::ast::Formula;
use crate::lang::ast::Program;
use crate::term::{ActionInstance, Atom, Bindings, Term};

pub const ASSIGN: &str = "assign";
pub const START: &str = "start";
pub const ACK: &str = "ackTaskCompletion";
pub const RELEASE: &str = "release";
pub const READY: &str = "readyToStartTask";
pub const FINISHED: &str = "finishedTask";

pub const FREE: &str = "free";
pub const ASSIGNED: &str = "assigned";
pub const ENABLED: &str = "enabled";
pub const STARTED: &str = "started";
pub const ACKED: &str = "acked";

/// Action name and arity of the PMS lifecycle actions.
pub const PMS_ACTIONS: &[(&str, usize)] = &[(ASSIGN, 3), (START, 4), (ACK, 3), (RELEASE, 3)];
/// Service report actions; external to the process program.
pub const REPORT_ACTIONS: &[(&str, usize)] = &[(READY, 3), (FINISHED, 4)];
pub const LIFECYCLE_FLUENTS: &[(&str, usize)] = &[(FREE, 1), (ASSIGNED, 3), (ENABLED, 3), (STARTED, 4), (ACKED, 3)];
/// Built-in predicates evaluated against the static domain tables.
pub const STATIC_PREDICATES: &[(&str, usize)] = &[("provide", 2), ("require", 2), ("capable", 2), ("available", 1)];

pub const SERVICE_SORT: &str = "service";
pub const TASK_SORT: &str = "task";
pub const CAPABILITY_SORT: &str = "capability";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskBehavior {
    /// Runs for a fixed number of ticks.
    Timed,
    /// Moves the service to the `loc(x,y)` input.
    Move,
    /// Moves the service next to the service named by the input and relays it.
    Follow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskOutput {
    Fixed(Term),
    /// The simulator's current picture quality, `good` or `bad`.
    Quality,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskDecl {
    pub name: String,
    pub input_sort: Option<String>,
    pub requires: Vec<String>,
    pub duration: Option<u32>,
    pub behavior: TaskBehavior,
    pub output: TaskOutput,
}

impl TaskDecl {
    /// The output the planner assumes when it simulates a report offline.
    pub fn nominal_output(&self) -> Term {
        match &self.output {
            TaskOutput::Fixed(t) => t.clone(),
            TaskOutput::Quality => Term::sym("good"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentDecl {
    pub name: String,
    pub sorts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDecl {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub pre: Formula,
    pub exogenous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Define {
    pub name: String,
    pub params: Vec<String>,
    pub body: Formula,
}

/// Fluent literal produced by an effect rule; `add == false` deletes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectLiteral {
    pub add: bool,
    pub name: String,
    pub args: Vec<Term>,
}

/// `effect <action pattern> [forall V in sort, ...] [when φ] => ±atom, ...`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectRule {
    pub action: String,
    pub pattern: Vec<Term>,
    pub foralls: Vec<(String, String)>,
    pub when: Formula,
    pub effects: Vec<EffectLiteral>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Program,
}

/// The static part of a scenario: sorts, capability tables and the action theory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Domain {
    pub sorts: BTreeMap<String, Vec<Term>>,
    pub tasks: Vec<TaskDecl>,
    pub provides: BTreeSet<(String, String)>,
    pub fluents: BTreeMap<String, FluentDecl>,
    pub actions: BTreeMap<String, ActionDecl>,
    pub defines: BTreeMap<String, Define>,
    pub effects: Vec<EffectRule>,
    pub procs: BTreeMap<String, ProcDef>,
}

const DEFINE_DEPTH: usize = 64;

impl Domain {
    pub fn services(&self) -> &[Term] {
        self.sorts.get(SERVICE_SORT).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sort(&self, name: &str) -> Result<&[Term], EvalError> {
        self.sorts.get(name).map(Vec::as_slice).ok_or_else(|| EvalError::UnknownSort(name.to_string()))
    }

    pub fn task(&self, name: &str) -> Option<&TaskDecl> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn requires(&self, task: &str) -> &[String] {
        self.task(task).map(|t| t.requires.as_slice()).unwrap_or(&[])
    }

    pub fn provides(&self, service: &str, cap: &str) -> bool {
        self.provides.contains(&(service.to_string(), cap.to_string()))
    }

    /// Arity of a fluent name, lifecycle or domain.
    pub fn fluent_arity(&self, name: &str) -> Option<usize> {
        LIFECYCLE_FLUENTS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, a)| *a)
            .or_else(|| self.fluents.get(name).map(|f| f.sorts.len()))
    }

    pub fn is_exogenous(&self, name: &str) -> bool {
        self.actions.get(name).is_some_and(|a| a.exogenous)
    }

    pub fn is_report(name: &str) -> bool {
        REPORT_ACTIONS.iter().any(|(n, _)| *n == name)
    }

    pub fn is_pms_action(name: &str) -> bool {
        PMS_ACTIONS.iter().any(|(n, _)| *n == name)
    }

    /// Arity of any action the theory knows about.
    pub fn action_arity(&self, name: &str) -> Option<usize> {
        PMS_ACTIONS
            .iter()
            .chain(REPORT_ACTIONS)
            .find(|(n, _)| *n == name)
            .map(|(_, a)| *a)
            .or_else(|| self.actions.get(name).map(|a| a.params.len()))
    }

    /// `Capable(a, wrkList)`: `a` provides every capability required by every task in the list.
    pub fn capable(&self, service: &str, worklist: &[Term]) -> Result<bool, EvalError> {
        for item in worklist {
            let task = worklist_task(item)?;
            if !self.requires(task).iter().all(|b| self.provides(service, b)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Task name of a `workitem(T, Id, I)` term.
pub fn worklist_task(item: &Term) -> Result<&str, EvalError> {
    match item {
        Term::App(f, args) if f == "workitem" && args.len() == 3 => {
            args[0].as_sym().ok_or_else(|| EvalError::BadWorklist(item.to_string()))
        }
        _ => Err(EvalError::BadWorklist(item.to_string())),
    }
}

/// Truth assignment over ground atoms (closed world: absent means false)
/// plus the action history that produced it from the initial situation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WorldState {
    pub fluents: BTreeSet<Atom>,
    pub history: Vec<ActionInstance>,
}

impl WorldState {
    pub fn new(fluents: BTreeSet<Atom>) -> Self {
        WorldState { fluents, history: Vec::new() }
    }

    pub fn step_count(&self) -> usize {
        self.history.len()
    }

    pub fn is_true(&self, atom: &Atom) -> bool {
        self.fluents.contains(atom)
    }

    pub fn fact(&self, name: &str, args: Vec<Term>) -> bool {
        self.fluents.contains(&Atom::new(name, args))
    }

    /// The same fluents with an empty history.
    pub fn snapshot(&self) -> WorldState {
        WorldState::new(self.fluents.clone())
    }

    /// Sorted true atoms, one per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for a in &self.fluents {
            out.push_str(&a.to_string());
            out.push('\n');
        }
        out
    }

    /// Hex prefix of the SHA-256 of the dump.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let h = Sha256::digest(self.dump().as_bytes());
        hex::encode(&h[..8])
    }
}

/// `SameState`: pointwise equality of fluents; histories are ignored.
pub fn same_state(a: &WorldState, b: &WorldState) -> bool {
    a.fluents == b.fluents
}

/// Evaluates a closed formula in `state`.
pub fn holds(domain: &Domain, state: &WorldState, f: &Formula) -> Result<bool, EvalError> {
    eval(domain, state, f, 0)
}

fn ground_args(args: &[Term]) -> Result<Vec<Term>, EvalError> {
    let out: Vec<Term> = args.iter().map(|t| t.subst(&Bindings::new())).collect();
    match out.iter().find(|t| !t.is_ground()) {
        Some(t) => Err(EvalError::NotGround(t.to_string())),
        None => Ok(out),
    }
}

fn eval(domain: &Domain, state: &WorldState, f: &Formula, depth: usize) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Not(g) => !eval(domain, state, g, depth)?,
        Formula::And(gs) => {
            for g in gs {
                if !eval(domain, state, g, depth)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval(domain, state, g, depth)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Eq(a, b) => ground_args(std::slice::from_ref(a))? == ground_args(std::slice::from_ref(b))?,
        Formula::Lt(a, b) => {
            let (a, b) = (a.subst(&Bindings::new()), b.subst(&Bindings::new()));
            match (a.as_int(), b.as_int()) {
                (Some(x), Some(y)) => x < y,
                _ => return Err(EvalError::BadComparison(a.to_string(), b.to_string())),
            }
        }
        Formula::Exists(v, sort, body) | Formula::Forall(v, sort, body) => {
            let want = matches!(f, Formula::Exists(..));
            for member in domain.sort(sort)? {
                let mut env = Bindings::new();
                env.insert(v.clone(), member.clone());
                if eval(domain, state, &body.subst(&env), depth)? == want {
                    return Ok(want);
                }
            }
            !want
        }
        Formula::Atom(name, args) => {
            let args = ground_args(args)?;
            if let Some(def) = domain.defines.get(name) {
                if def.params.len() == args.len() {
                    if depth >= DEFINE_DEPTH {
                        return Err(EvalError::DefineDepth(name.clone()));
                    }
                    let env: Bindings = def.params.iter().cloned().zip(args).collect();
                    return eval(domain, state, &def.body.subst(&env), depth + 1);
                }
            }
            match (name.as_str(), args.as_slice()) {
                ("provide", [s, b]) => match (s.as_sym(), b.as_sym()) {
                    (Some(s), Some(b)) => domain.provides(s, b),
                    _ => false,
                },
                ("require", [t, b]) => match (t.as_sym(), b.as_sym()) {
                    (Some(t), Some(b)) => domain.requires(t).iter().any(|c| c == b),
                    _ => false,
                },
                ("capable", [s, Term::List(items)]) => match s.as_sym() {
                    Some(s) => domain.capable(s, items)?,
                    None => false,
                },
                ("capable", [_, other]) => return Err(EvalError::BadWorklist(other.to_string())),
                // Without a domain definition a service is available iff free.
                ("available", [s]) => state.fact(FREE, vec![s.clone()]),
                _ => match domain.fluent_arity(name) {
                    Some(n) if n == args.len() => state.fact(name, args),
                    _ => return Err(EvalError::UnknownFluent(format!("{name}/{}", args.len()))),
                },
            }
        }
    })
}

/// `available(a)` under the scenario's definition.
pub fn available(domain: &Domain, state: &WorldState, service: &Term) -> Result<bool, EvalError> {
    holds(domain, state, &Formula::atom("available", vec![service.clone()]))
}

fn key3(a: &ActionInstance) -> Option<[Term; 3]> {
    (a.args.len() >= 3).then(|| [a.args[0].clone(), a.args[1].clone(), a.args[2].clone()])
}

fn started_inputs<'s>(state: &'s WorldState, k: &[Term; 3]) -> impl Iterator<Item = &'s Atom> + 's {
    let k = k.clone();
    state.fluents.iter().filter(move |f| f.name == STARTED && f.args.len() == 4 && f.args[..3] == k[..])
}

/// Precondition of an action in `state`. Reports and exogenous events are always possible.
pub fn poss(domain: &Domain, state: &WorldState, a: &ActionInstance) -> Result<bool, EvalError> {
    let arity_ok = domain.action_arity(&a.name).is_some_and(|n| n == a.args.len());
    if !arity_ok {
        return Err(EvalError::UnknownAction(format!("{}/{}", a.name, a.args.len())));
    }
    let k = key3(a);
    Ok(match a.name.as_str() {
        ASSIGN => available(domain, state, &a.args[0])?,
        START => state.fact(ENABLED, k.unwrap().to_vec()),
        ACK => {
            let k = k.unwrap();
            !state.fact(ENABLED, k.to_vec()) && started_inputs(state, &k).next().is_some()
        }
        RELEASE => !state.fact(FREE, vec![a.args[0].clone()]) && state.fact(ACKED, k.unwrap().to_vec()),
        READY | FINISHED => true,
        name => {
            let decl = &domain.actions[name];
            if decl.exogenous {
                true
            } else {
                let env: Bindings = decl.params.iter().map(|(v, _)| v.clone()).zip(a.args.iter().cloned()).collect();
                holds(domain, state, &decl.pre.subst(&env))?
            }
        }
    })
}

/// Successor state after `a`. Adds and deletes are computed against the prior
/// state; an atom both added and deleted ends up true.
pub fn progress(domain: &Domain, state: &WorldState, a: &ActionInstance) -> Result<WorldState, EvalError> {
    let (adds, dels) = effects_of(domain, state, a)?;
    let mut fluents = state.fluents.clone();
    for d in &dels {
        fluents.remove(d);
    }
    fluents.extend(adds);
    let mut history = state.history.clone();
    history.push(a.clone());
    Ok(WorldState { fluents, history })
}

/// Positive and negative effects of `a` in `state`.
pub fn effects_of(
    domain: &Domain,
    state: &WorldState,
    a: &ActionInstance,
) -> Result<(BTreeSet<Atom>, BTreeSet<Atom>), EvalError> {
    let mut adds = BTreeSet::new();
    let mut dels = BTreeSet::new();
    lifecycle_effects(state, a, &mut adds, &mut dels);
    for rule in domain.effects.iter().filter(|r| r.action == a.name && r.pattern.len() == a.args.len()) {
        let mut env = Bindings::new();
        if !rule.pattern.iter().zip(&a.args).all(|(p, g)| p.match_ground(g, &mut env)) {
            continue;
        }
        for binding in forall_bindings(domain, &rule.foralls, env)? {
            if !holds(domain, state, &rule.when.subst(&binding))? {
                continue;
            }
            for lit in &rule.effects {
                let args = ground_args(&lit.args.iter().map(|t| t.subst(&binding)).collect::<Vec<_>>())?;
                let atom = Atom::new(lit.name.clone(), args);
                if lit.add {
                    adds.insert(atom);
                } else {
                    dels.insert(atom);
                }
            }
        }
    }
    Ok((adds, dels))
}

fn forall_bindings(domain: &Domain, foralls: &[(String, String)], base: Bindings) -> Result<Vec<Bindings>, EvalError> {
    let mut out = vec![base];
    for (v, sort) in foralls {
        let members = domain.sort(sort)?;
        out = out
            .into_iter()
            .flat_map(|env| {
                members.iter().map(move |m| {
                    let mut e = env.clone();
                    e.insert(v.clone(), m.clone());
                    e
                })
            })
            .collect();
    }
    Ok(out)
}

fn lifecycle_effects(state: &WorldState, a: &ActionInstance, adds: &mut BTreeSet<Atom>, dels: &mut BTreeSet<Atom>) {
    let Some(k) = key3(a) else { return };
    let svc = k[0].clone();
    match a.name.as_str() {
        ASSIGN => {
            dels.insert(Atom::new(FREE, vec![svc]));
            adds.insert(Atom::new(ASSIGNED, k.to_vec()));
        }
        RELEASE => {
            if !state.fact(FREE, vec![svc.clone()]) {
                adds.insert(Atom::new(FREE, vec![svc]));
            }
            dels.insert(Atom::new(ASSIGNED, k.to_vec()));
            dels.insert(Atom::new(ACKED, k.to_vec()));
        }
        READY => {
            if !state.fact(ENABLED, k.to_vec()) {
                adds.insert(Atom::new(ENABLED, k.to_vec()));
            }
        }
        FINISHED => {
            dels.insert(Atom::new(ENABLED, k.to_vec()));
        }
        START if a.args.len() == 4 => {
            if started_inputs(state, &k).next().is_none() {
                let mut args = k.to_vec();
                args.push(a.args[3].clone());
                adds.insert(Atom::new(STARTED, args));
            }
        }
        ACK => {
            dels.extend(started_inputs(state, &k).cloned());
            adds.insert(Atom::new(ACKED, k.to_vec()));
        }
        _ => {}
    }
}

/// Services violating `available(a) ⇒ free(a)` in `state`.
pub fn availability_violations(domain: &Domain, state: &WorldState) -> Result<Vec<Term>, EvalError> {
    let mut out = Vec::new();
    for s in domain.services() {
        if available(domain, state, s)? && !state.fact(FREE, vec![s.clone()]) {
            out.push(s.clone());
        }
    }
    Ok(out)
}
