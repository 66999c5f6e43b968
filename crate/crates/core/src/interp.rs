//! Single-step transition semantics (`trans`/`final`) and bounded offline
//! lookahead (`do_offline`).
//!
//! A transition either performs one ground primitive action or is a silent
//! step (test, guard commitment). Configurations pair a program with a world
//! state; `trans` never changes the state itself, the caller progresses it.

use std::cell::Cell;
use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::error::{EvalError, InterpError};
use crate::lang::ast::{Interrupt, Program};
use crate::lifecycle::{self, MANAGE_EXECUTION, MANAGE_TASKS};
use crate::sitcalc::{holds, poss, progress, Domain, WorldState, ACKED, ASSIGNED, ENABLED, FINISHED, READY, STARTED};
use crate::term::{ActionInstance, Atom, Bindings, Term};

pub const INLINE_DEPTH: usize = 512;
pub const DEFAULT_MAX_NODES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    /// `None` for a silent step.
    pub action: Option<ActionInstance>,
    pub next: Program,
}

impl Transition {
    fn tau(next: Program) -> Self {
        Transition { action: None, next }
    }
}

/// Which work items the offline service model answers for.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Responder {
    #[default]
    All,
    Only(BTreeSet<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub nodes: usize,
    pub depth: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    /// Every action on the path, simulated service reports included.
    pub actions: Vec<ActionInstance>,
    pub residual: Program,
    pub state: WorldState,
}

pub struct Interpreter<'d> {
    pub domain: &'d Domain,
    pub responder: Responder,
    pub max_nodes: usize,
    nodes: Cell<usize>,
}

impl<'d> Interpreter<'d> {
    pub fn new(domain: &'d Domain) -> Self {
        Interpreter { domain, responder: Responder::All, max_nodes: DEFAULT_MAX_NODES, nodes: Cell::new(0) }
    }

    pub fn with_responder(mut self, r: Responder) -> Self {
        self.responder = r;
        self
    }

    /// Total configurations expanded by offline searches so far.
    pub fn nodes_expanded(&self) -> usize {
        self.nodes.get()
    }

    fn holds(&self, s: &WorldState, f: &crate::lang::ast::Formula) -> Result<bool, InterpError> {
        Ok(holds(self.domain, s, f)?)
    }

    /// Body of a procedure call with arguments substituted.
    pub fn expand(&self, name: &str, args: &[Term]) -> Result<Program, InterpError> {
        let args: Vec<Term> = args.iter().map(|t| t.subst(&Bindings::new())).collect();
        match name {
            MANAGE_TASKS if args.len() == 1 => {
                let items = lifecycle::worklist(&args[0]).ok_or_else(|| EvalError::BadWorklist(args[0].to_string()))?;
                Ok(lifecycle::manage_tasks(&items))
            }
            MANAGE_EXECUTION if args.len() == 2 => {
                let items = lifecycle::worklist(&args[0]).ok_or_else(|| EvalError::BadWorklist(args[0].to_string()))?;
                if !args[1].is_ground() || items.iter().any(|w| !w.input.is_ground()) {
                    return Err(InterpError::UnboundAction(format!("{name}({},{})", args[0], args[1])));
                }
                Ok(lifecycle::manage_execution(&items, &args[1]))
            }
            _ => match self.domain.procs.get(name) {
                Some(def) if def.params.len() == args.len() => {
                    let env: Bindings = def.params.iter().cloned().zip(args).collect();
                    Ok(def.body.subst(&env))
                }
                _ => Err(InterpError::UnknownProc(name.to_string(), args.len())),
            },
        }
    }

    /// Inlines procedure calls at the head of `p` without recursion.
    fn unfold(&self, p: &Program, mut depth: usize) -> Result<(Option<Program>, usize), InterpError> {
        let mut cur: Option<Program> = None;
        while let Program::ProcCall(name, args) = cur.as_ref().unwrap_or(p) {
            if depth >= INLINE_DEPTH {
                return Err(InterpError::InlineDepth(INLINE_DEPTH));
            }
            depth += 1;
            cur = Some(self.expand(name, args)?);
        }
        Ok((cur, depth))
    }

    pub fn trans(&self, p: &Program, s: &WorldState) -> Result<Vec<Transition>, InterpError> {
        self.trans_at(p, s, 0)
    }

    pub fn is_final(&self, p: &Program, s: &WorldState) -> Result<bool, InterpError> {
        self.final_at(p, s, 0)
    }

    fn trans_at(&self, p: &Program, s: &WorldState, depth: usize) -> Result<Vec<Transition>, InterpError> {
        let (unfolded, depth) = self.unfold(p, depth)?;
        let p = unfolded.as_ref().unwrap_or(p);
        let mut out = Vec::new();
        match p {
            Program::Nil => {}
            Program::Act(t) => {
                let a = t.ground().ok_or_else(|| InterpError::UnboundAction(t.to_string()))?;
                match self.domain.action_arity(&a.name) {
                    None => return Err(InterpError::UnknownAction(a.name)),
                    Some(_) if Domain::is_report(&a.name) || self.domain.is_exogenous(&a.name) => {
                        return Err(InterpError::NotExecutable(a.name))
                    }
                    Some(_) => {}
                }
                if poss(self.domain, s, &a)? {
                    out.push(Transition { action: Some(a), next: Program::Nil });
                }
            }
            Program::Test(f) => {
                if self.holds(s, f)? {
                    out.push(Transition::tau(Program::Nil));
                }
            }
            Program::Seq(l, r) => {
                for t in self.trans_at(l, s, depth)? {
                    out.push(Transition { action: t.action, next: Program::seq(t.next, (**r).clone()) });
                }
                if self.final_at(l, s, depth)? {
                    out.extend(self.trans_at(r, s, depth)?);
                }
            }
            Program::Choice(branches) => {
                for (g, body) in branches {
                    if *g == crate::lang::ast::Formula::True {
                        out.extend(self.trans_at(body, s, depth)?);
                    } else if self.holds(s, g)? {
                        out.push(Transition::tau(body.clone()));
                    }
                }
            }
            Program::While(c, body) => {
                if self.holds(s, c)? {
                    for t in self.trans_at(body, s, depth)? {
                        out.push(Transition { action: t.action, next: Program::seq(t.next, p.clone()) });
                    }
                }
            }
            Program::Conc(l, r) => {
                for t in self.trans_at(l, s, depth)? {
                    out.push(Transition { action: t.action, next: Program::conc(t.next, (**r).clone()) });
                }
                for t in self.trans_at(r, s, depth)? {
                    out.push(Transition { action: t.action, next: Program::conc((**l).clone(), t.next) });
                }
            }
            Program::Star(body, n) => {
                if *n > 0 {
                    let rest = if *n > 1 { Program::Star(body.clone(), n - 1) } else { Program::Nil };
                    for t in self.trans_at(body, s, depth)? {
                        out.push(Transition { action: t.action, next: Program::seq(t.next, rest.clone()) });
                    }
                }
            }
            Program::Search(body, n) => {
                for t in self.trans_at(body, s, depth)? {
                    let s2 = match &t.action {
                        Some(a) => progress(self.domain, s, a)?,
                        None => s.clone(),
                    };
                    let ok = self.do_offline(&t.next, &s2, *n as usize, &|i, p, s| i.is_final(p, s))?.is_some();
                    if ok {
                        out.push(Transition { action: t.action, next: Program::Search(Box::new(t.next), *n) });
                    }
                }
            }
            Program::Pick(v, sort, body) => {
                for m in self.domain.sort(sort)? {
                    let env: Bindings = [(v.clone(), m.clone())].into_iter().collect();
                    out.extend(self.trans_at(&body.subst(&env), s, depth)?);
                }
            }
            Program::ProcCall(..) => unreachable!("unfolded above"),
            Program::Interrupts(is) => {
                let mut order: Vec<&Interrupt> = is.iter().collect();
                order.sort_by_key(|i| i.priority);
                for i in order {
                    if !self.holds(s, &i.trigger)? {
                        continue;
                    }
                    let ts = self.trans_at(&i.body, s, depth)?;
                    if !ts.is_empty() {
                        for t in ts {
                            out.push(Transition { action: t.action, next: Program::seq(t.next, p.clone()) });
                        }
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    fn final_at(&self, p: &Program, s: &WorldState, depth: usize) -> Result<bool, InterpError> {
        let (unfolded, depth) = self.unfold(p, depth)?;
        let p = unfolded.as_ref().unwrap_or(p);
        Ok(match p {
            Program::Nil | Program::Star(..) => true,
            Program::Act(_) | Program::Test(_) => false,
            Program::Seq(l, r) | Program::Conc(l, r) => self.final_at(l, s, depth)? && self.final_at(r, s, depth)?,
            Program::Choice(branches) => {
                for (g, body) in branches {
                    if self.holds(s, g)? && self.final_at(body, s, depth)? {
                        return Ok(true);
                    }
                }
                false
            }
            Program::While(c, body) => !self.holds(s, c)? || self.final_at(body, s, depth)?,
            Program::Search(body, _) => self.final_at(body, s, depth)?,
            Program::Pick(v, sort, body) => {
                for m in self.domain.sort(sort)? {
                    let env: Bindings = [(v.clone(), m.clone())].into_iter().collect();
                    if self.final_at(&body.subst(&env), s, depth)? {
                        return Ok(true);
                    }
                }
                false
            }
            Program::ProcCall(..) => unreachable!("unfolded above"),
            Program::Interrupts(is) => {
                for i in is {
                    if self.holds(s, &i.trigger)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    /// Service reports a well-behaved service would send next, in fluent order.
    pub fn simulated_reports(&self, s: &WorldState) -> Vec<ActionInstance> {
        let allowed = |id: &Term| match &self.responder {
            Responder::All => true,
            Responder::Only(ids) => ids.contains(id),
        };
        let mut out = Vec::new();
        for f in &s.fluents {
            if f.name == ASSIGNED && f.args.len() == 3 && allowed(&f.args[2]) {
                let k = f.args.clone();
                let started = s.fluents.iter().any(|g| g.name == STARTED && g.args.len() == 4 && g.args[..3] == k[..]);
                if !s.is_true(&Atom::new(ENABLED, k.clone())) && !started && !s.is_true(&Atom::new(ACKED, k.clone())) {
                    out.push(ActionInstance::new(READY, k));
                }
            } else if f.name == STARTED && f.args.len() == 4 && allowed(&f.args[2]) {
                let k = f.args[..3].to_vec();
                if s.is_true(&Atom::new(ENABLED, k.clone())) {
                    let q = f.args[1]
                        .as_sym()
                        .and_then(|t| self.domain.task(t))
                        .map(|t| t.nominal_output())
                        .unwrap_or_else(Term::none);
                    let mut args = k;
                    args.push(q);
                    out.push(ActionInstance::new(FINISHED, args));
                }
            }
        }
        out
    }

    /// Layered breadth-first lookahead: the shortest (fewest actions) path from
    /// `(p, s)` to a configuration satisfying `accept`, using at most `max_len`
    /// actions. Blocked configurations are extended by simulated service reports.
    pub fn do_offline(
        &self,
        p: &Program,
        s: &WorldState,
        max_len: usize,
        accept: &dyn Fn(&Self, &Program, &WorldState) -> Result<bool, InterpError>,
    ) -> Result<Option<Plan>, InterpError> {
        Ok(self.search(p, s, max_len, accept)?.0)
    }

    pub fn search(
        &self,
        p: &Program,
        s: &WorldState,
        max_len: usize,
        accept: &dyn Fn(&Self, &Program, &WorldState) -> Result<bool, InterpError>,
    ) -> Result<(Option<Plan>, SearchStats), InterpError> {
        struct Node {
            prog: Program,
            state: WorldState,
            parent: Option<usize>,
            action: Option<ActionInstance>,
        }
        let mut stats = SearchStats::default();
        let mut nodes: Vec<Node> = vec![Node { prog: p.clone(), state: s.snapshot(), parent: None, action: None }];
        let mut seen: HashSet<(Program, BTreeSet<Atom>)> = HashSet::new();
        seen.insert((p.clone(), s.fluents.clone()));
        let mut layer: Vec<usize> = vec![0];
        for len in 0..=max_len {
            stats.depth = len;
            let mut next_layer = Vec::new();
            let mut queue: VecDeque<usize> = layer.into_iter().collect();
            while let Some(i) = queue.pop_front() {
                stats.nodes += 1;
                self.nodes.set(self.nodes.get() + 1);
                if stats.nodes > self.max_nodes {
                    stats.truncated = true;
                    return Ok((None, stats));
                }
                let (prog, state) = (nodes[i].prog.clone(), nodes[i].state.clone());
                if accept(self, &prog, &state)? {
                    let mut actions = Vec::new();
                    let mut cur = Some(i);
                    while let Some(c) = cur {
                        if let Some(a) = &nodes[c].action {
                            actions.push(a.clone());
                        }
                        cur = nodes[c].parent;
                    }
                    actions.reverse();
                    let mut full = s.clone();
                    full.fluents = state.fluents;
                    full.history.extend(actions.iter().cloned());
                    return Ok((Some(Plan { actions, residual: prog, state: full }), stats));
                }
                let mut ts = self.trans(&prog, &state)?;
                if ts.is_empty() && !self.is_final(&prog, &state)? {
                    ts = self
                        .simulated_reports(&state)
                        .into_iter()
                        .map(|a| Transition { action: Some(a), next: prog.clone() })
                        .collect();
                }
                for t in ts {
                    if t.action.is_some() && len == max_len {
                        continue;
                    }
                    let st = match &t.action {
                        Some(a) => {
                            let mut n = progress(self.domain, &state, a)?;
                            n.history.clear();
                            n
                        }
                        None => state.clone(),
                    };
                    if !seen.insert((t.next.clone(), st.fluents.clone())) {
                        continue;
                    }
                    let is_tau = t.action.is_none();
                    nodes.push(Node { prog: t.next, state: st, parent: Some(i), action: t.action });
                    let j = nodes.len() - 1;
                    if is_tau {
                        queue.push_back(j);
                    } else {
                        next_layer.push(j);
                    }
                }
            }
            if next_layer.is_empty() {
                break;
            }
            layer = next_layer;
        }
        Ok((None, stats))
    }
}
