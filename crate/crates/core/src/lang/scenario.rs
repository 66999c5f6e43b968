//! Scenario files (`.scn`): sorts, capability tables, the action theory, the
//! process, the simulated node layout and a script of timed exogenous events.
//!
//! Every statement ends with `.`; `%` starts a comment. See `docs/grammar.ebnf`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{ParseErrors, SyntaxError};
use crate::lang::ast::{Formula, Program};
use crate::lang::lexer::Tok;
use crate::lang::parser::Parser;
use crate::lifecycle::{MANAGE_EXECUTION, MANAGE_TASKS};
use crate::sitcalc::{
    ActionDecl, Define, Domain, EffectLiteral, EffectRule, FluentDecl, ProcDef, TaskBehavior, TaskDecl, TaskOutput,
    WorldState, CAPABILITY_SORT, FREE, LIFECYCLE_FLUENTS, SERVICE_SORT, STATIC_PREDICATES, TASK_SORT,
};
use crate::term::{ActionInstance, Atom, Term};

pub const DEFAULT_SEARCH_BOUND: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDecl {
    pub name: String,
    pub pos: (i64, i64),
    pub range: i64,
    pub speed: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedEvent {
    pub tick: u64,
    pub action: ActionInstance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub domain: Domain,
    /// Explicit `init` atoms. See [`Scenario::initial_state`] for the full assignment.
    pub initial: BTreeSet<Atom>,
    pub process: Program,
    pub script: Vec<ScriptedEvent>,
    pub search_bound: u32,
    pub seed: u64,
    pub nodes: Vec<NodeDecl>,
    pub coordinator: Option<String>,
    pub quality_good: bool,
}

impl Scenario {
    /// Initial situation: `init` atoms, every service free, and `connected(s)`
    /// derived from the node layout when both are declared.
    pub fn initial_state(&self) -> WorldState {
        let mut fluents = self.initial.clone();
        for s in self.domain.services() {
            fluents.insert(Atom::new(FREE, vec![s.clone()]));
        }
        if self.derives_connectivity() {
            let graph = crate::sim::LinkGraph::from_decls(&self.nodes, self.coordinator.as_deref(), &BTreeSet::new());
            for s in self.domain.services() {
                if let Some(name) = s.as_sym() {
                    if graph.connected(name) {
                        fluents.insert(Atom::new("connected", vec![s.clone()]));
                    }
                }
            }
        }
        WorldState::new(fluents)
    }

    pub fn derives_connectivity(&self) -> bool {
        !self.nodes.is_empty()
            && self.coordinator.is_some()
            && self.domain.fluents.get("connected").is_some_and(|f| f.sorts == [SERVICE_SORT])
    }
}

struct Pos(usize, usize);

#[derive(Default)]
struct Builder {
    domain: Domain,
    init: Vec<(Atom, Pos)>,
    process: Option<Program>,
    script: Vec<(ScriptedEvent, Pos)>,
    search_bound: Option<u32>,
    seed: Option<u64>,
    nodes: Vec<(NodeDecl, Pos)>,
    coordinator: Option<(NodeDecl, Pos)>,
    quality_good: Option<bool>,
    provides: Vec<(String, Vec<String>, Pos)>,
    proc_pos: BTreeMap<String, Pos>,
    errors: Vec<SyntaxError>,
}

impl Builder {
    fn error(&mut self, pos: &Pos, msg: impl Into<String>) {
        self.errors.push(SyntaxError::new(pos.0, pos.1, msg));
    }

    fn add_sort(&mut self, name: &str, members: Vec<Term>, pos: &Pos) {
        if self.domain.sorts.contains_key(name) {
            self.error(pos, format!("sort `{name}` declared twice"));
        }
        self.domain.sorts.insert(name.to_string(), members);
    }
}

/// Parses and resolves a scenario file. All cross references are checked.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseErrors> {
    let mut p = Parser::new(text)?;
    let mut b = Builder::default();
    while !p.at_eof() {
        let (l, c) = p.here();
        if let Err(e) = statement(&mut p, &mut b, Pos(l, c)) {
            b.errors.push(e);
            p.recover_to_dot();
        }
    }
    resolve(b)
}

const TASK_ATTRIBUTES: &[&str] = &["requires", "duration", "moves", "follows", "yields", "reports"];

fn ident_list(p: &mut Parser) -> Result<Vec<String>, SyntaxError> {
    let mut out = Vec::new();
    while let Tok::Ident(s) = p.peek() {
        if TASK_ATTRIBUTES.contains(&s.as_str()) {
            break;
        }
        out.push(p.ident()?);
    }
    Ok(out)
}

fn sort_list(p: &mut Parser) -> Result<Vec<String>, SyntaxError> {
    if p.eat(&Tok::LParen) {
        p.comma_list(&Tok::RParen, Parser::ident)
    } else {
        Ok(Vec::new())
    }
}

/// `(V: sort, ...)` parameter lists of actions.
fn typed_params(p: &mut Parser) -> Result<Vec<(String, String)>, SyntaxError> {
    if !p.eat(&Tok::LParen) {
        return Ok(Vec::new());
    }
    p.comma_list(&Tok::RParen, |p| {
        let v = p.ident()?;
        p.expect(&Tok::Colon)?;
        Ok((v, p.ident()?))
    })
}

fn untyped_params(p: &mut Parser) -> Result<Vec<String>, SyntaxError> {
    if p.eat(&Tok::LParen) {
        p.comma_list(&Tok::RParen, Parser::ident)
    } else {
        Ok(Vec::new())
    }
}

fn ground_atom(p: &mut Parser) -> Result<Atom, SyntaxError> {
    let t = p.term()?;
    if !t.is_ground() {
        return p.err(format!("`{t}` is not ground"));
    }
    match t {
        Term::Sym(n) => Ok(Atom::new(n, vec![])),
        Term::App(n, args) => Ok(Atom::new(n, args)),
        other => p.err(format!("`{other}` is not an atom")),
    }
}

fn node_tail(p: &mut Parser, name: String) -> Result<NodeDecl, SyntaxError> {
    if !p.peek_ident("at") {
        return p.err("expected `at X Y`");
    }
    p.bump();
    let x = p.int()?;
    let y = p.int()?;
    let mut node = NodeDecl { name, pos: (x, y), range: 0, speed: 1 };
    loop {
        if p.peek_ident("range") {
            p.bump();
            node.range = p.int()?;
            if node.range < 0 {
                return p.err("communication range must be non-negative");
            }
        } else if p.peek_ident("speed") {
            p.bump();
            node.speed = p.int()?;
            if node.speed <= 0 {
                return p.err("speed must be positive");
            }
        } else {
            return Ok(node);
        }
    }
}

fn statement(p: &mut Parser, b: &mut Builder, pos: Pos) -> Result<(), SyntaxError> {
    let kw = p.ident()?;
    match kw.as_str() {
        "services" | "capabilities" => {
            let names = ident_list(p)?;
            let sort = if kw == "services" { SERVICE_SORT } else { CAPABILITY_SORT };
            b.add_sort(sort, names.into_iter().map(Term::Sym).collect(), &pos);
        }
        "sort" => {
            let name = p.ident()?;
            if [SERVICE_SORT, TASK_SORT, CAPABILITY_SORT].contains(&name.as_str()) {
                return p.err(format!("sort `{name}` is built in"));
            }
            p.expect(&Tok::Eq)?;
            let members = if let (Tok::Int(lo), Tok::DotDot) = (p.peek().clone(), p.peek_at(1).clone()) {
                p.bump();
                p.bump();
                let hi = p.int()?;
                if hi < lo {
                    return p.err("empty integer range");
                }
                (lo..=hi).map(Term::Int).collect()
            } else {
                let mut ms = Vec::new();
                while *p.peek() != Tok::Dot && !p.at_eof() {
                    let t = p.term()?;
                    if !t.is_ground() {
                        return p.err(format!("sort member `{t}` is not ground"));
                    }
                    ms.push(t);
                }
                ms
            };
            b.add_sort(&name, members, &pos);
        }
        "task" => {
            let name = p.ident()?;
            let input = sort_list(p)?;
            if input.len() > 1 {
                return p.err("a task takes at most one input sort");
            }
            let mut task = TaskDecl {
                name,
                input_sort: input.into_iter().next(),
                requires: Vec::new(),
                duration: None,
                behavior: TaskBehavior::Timed,
                output: TaskOutput::Fixed(Term::none()),
            };
            while let Tok::Ident(attr) = p.peek().clone() {
                p.bump();
                match attr.as_str() {
                    "requires" => task.requires = ident_list(p)?,
                    "duration" => {
                        let d = p.int()?;
                        if d < 1 {
                            return p.err("duration must be at least 1 tick");
                        }
                        task.duration = Some(d as u32);
                    }
                    "moves" => task.behavior = TaskBehavior::Move,
                    "follows" => task.behavior = TaskBehavior::Follow,
                    "yields" => task.output = TaskOutput::Fixed(p.term()?),
                    "reports" => {
                        let what = p.ident()?;
                        if what != "quality" {
                            return p.err(format!("unknown report `{what}`"));
                        }
                        task.output = TaskOutput::Quality;
                    }
                    other => return p.err(format!("unknown task attribute `{other}`")),
                }
            }
            if b.domain.tasks.iter().any(|t| t.name == task.name) {
                b.error(&pos, format!("task `{}` declared twice", task.name));
            }
            b.domain.tasks.push(task);
        }
        "provides" => {
            let svc = p.ident()?;
            p.expect(&Tok::Colon)?;
            let caps = ident_list(p)?;
            b.provides.push((svc, caps, pos));
        }
        "fluent" => {
            let name = p.ident()?;
            let sorts = sort_list(p)?;
            if b.domain.fluents.contains_key(&name) || LIFECYCLE_FLUENTS.iter().any(|(n, _)| *n == name) {
                b.error(&pos, format!("fluent `{name}` declared twice or built in"));
            }
            b.domain.fluents.insert(name.clone(), FluentDecl { name, sorts });
        }
        "init" => {
            let atom = ground_atom(p)?;
            b.init.push((atom, pos));
        }
        "define" => {
            let name = p.ident()?;
            let params = untyped_params(p)?;
            p.expect(&Tok::Define)?;
            let body = p.with_scope(&params, Parser::formula)?;
            if b.domain.defines.contains_key(&name) {
                b.error(&pos, format!("`{name}` defined twice"));
            }
            b.domain.defines.insert(name.clone(), Define { name, params, body });
        }
        "action" | "exogenous" => {
            let name = p.ident()?;
            let params = typed_params(p)?;
            let vars: Vec<String> = params.iter().map(|(v, _)| v.clone()).collect();
            let pre = if kw == "action" && p.peek_ident("pre") {
                p.bump();
                p.with_scope(&vars, Parser::formula)?
            } else {
                Formula::True
            };
            if b.domain.action_arity(&name).is_some() {
                b.error(&pos, format!("action `{name}` declared twice or built in"));
            }
            b.domain.actions.insert(name.clone(), ActionDecl { name, params, pre, exogenous: kw == "exogenous" });
        }
        "effect" => {
            let action = p.ident()?;
            let pattern = if p.eat(&Tok::LParen) { p.comma_list(&Tok::RParen, Parser::term)? } else { Vec::new() };
            let mut foralls = Vec::new();
            if p.peek_ident("forall") {
                p.bump();
                loop {
                    let v = p.ident()?;
                    if !p.peek_ident("in") {
                        return p.err("expected `in`");
                    }
                    p.bump();
                    foralls.push((v, p.ident()?));
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            let bound: Vec<String> = foralls.iter().map(|(v, _)| v.clone()).collect();
            let when = if p.peek_ident("when") {
                p.bump();
                p.with_scope(&bound, Parser::formula)?
            } else {
                Formula::True
            };
            p.expect(&Tok::Arrow)?;
            let effects = p.with_scope(&bound, |p| {
                let mut out = Vec::new();
                loop {
                    let add = match p.bump() {
                        Tok::Plus => true,
                        Tok::Minus => false,
                        other => return p.err(format!("expected `+atom` or `-atom`, found {other}")),
                    };
                    match p.term()? {
                        Term::Sym(n) => out.push(EffectLiteral { add, name: n, args: vec![] }),
                        Term::App(n, args) => out.push(EffectLiteral { add, name: n, args }),
                        other => return p.err(format!("`{other}` is not an atom")),
                    }
                    if !p.eat(&Tok::Comma) {
                        return Ok(out);
                    }
                }
            })?;
            b.domain.effects.push(EffectRule { action, pattern, foralls, when, effects });
        }
        "proc" => {
            let name = p.ident()?;
            let params = untyped_params(p)?;
            p.expect(&Tok::Define)?;
            let body = p.with_scope(&params, |p| p.program(false))?;
            if b.domain.procs.contains_key(&name) || name == MANAGE_TASKS || name == MANAGE_EXECUTION {
                b.error(&pos, format!("duplicate proc `{name}`"));
            } else {
                b.proc_pos.insert(name.clone(), pos);
                b.domain.procs.insert(name.clone(), ProcDef { name, params, body });
            }
            return p.expect(&Tok::Dot);
        }
        "process" => {
            p.expect(&Tok::Define)?;
            let prog = p.program(true)?;
            if b.process.is_some() {
                b.error(&pos, "process declared twice");
            }
            b.process = Some(prog);
        }
        "node" => {
            let name = p.ident()?;
            let node = node_tail(p, name)?;
            b.nodes.push((node, pos));
        }
        "coordinator" => {
            let name = p.ident()?;
            let node = node_tail(p, name)?;
            b.coordinator = Some((node, pos));
        }
        "at" => {
            let tick = p.int()?;
            if tick < 0 {
                return p.err("event tick must be non-negative");
            }
            p.eat(&Tok::Colon);
            let t = p.term()?;
            let Some(action) = ActionInstance::from_term(&t) else {
                return p.err(format!("`{t}` is not a ground action"));
            };
            b.script.push((ScriptedEvent { tick: tick as u64, action }, pos));
        }
        "searchbound" => {
            let n = p.int()?;
            if n <= 0 {
                return p.err("search bound must be positive");
            }
            b.search_bound = Some(n as u32);
        }
        "seed" => {
            let n = p.int()?;
            b.seed = Some(n as u64);
        }
        "quality" => {
            let q = p.ident()?;
            b.quality_good = Some(match q.as_str() {
                "good" => true,
                "bad" => false,
                _ => return p.err("quality is `good` or `bad`"),
            });
        }
        other => return p.err(format!("unknown statement `{other}`")),
    }
    p.expect(&Tok::Dot)
}

// ---- resolution ----

/// Resolves calls in a standalone program against `domain`: action names
/// that denote procedures become calls, and unknown names are errors.
pub fn resolve_program(domain: &Domain, p: &mut Program) -> Result<(), Vec<String>> {
    let mut ck = Checker { domain, errors: vec![] };
    ck.program(p);
    if ck.errors.is_empty() {
        Ok(())
    } else {
        Err(ck.errors)
    }
}

struct Checker<'a> {
    domain: &'a Domain,
    errors: Vec<String>,
}

impl Checker<'_> {
    fn is_proc(&self, name: &str) -> bool {
        self.domain.procs.contains_key(name) || name == MANAGE_TASKS || name == MANAGE_EXECUTION
    }

    fn program(&mut self, p: &mut Program) {
        match p {
            Program::Nil | Program::ProcCall(..) => {}
            Program::Act(a) => {
                let known_action = self.domain.action_arity(&a.name).is_some();
                if self.is_proc(&a.name) {
                    if known_action {
                        self.errors.push(format!("`{}` is both an action and a proc", a.name));
                    }
                    let want = match a.name.as_str() {
                        MANAGE_TASKS => 1,
                        MANAGE_EXECUTION => 2,
                        n => self.domain.procs[n].params.len(),
                    };
                    if want != a.args.len() {
                        self.errors.push(format!("proc `{}` takes {want} arguments, got {}", a.name, a.args.len()));
                    }
                    *p = Program::ProcCall(a.name.clone(), a.args.clone());
                    return;
                }
                match self.domain.action_arity(&a.name) {
                    None => self.errors.push(format!("unknown action or proc `{}`", a.name)),
                    Some(n) if n != a.args.len() => {
                        self.errors.push(format!("action `{}` takes {n} arguments, got {}", a.name, a.args.len()))
                    }
                    Some(_) if Domain::is_report(&a.name) || self.domain.is_exogenous(&a.name) => self
                        .errors
                        .push(format!("`{}` is a service report or exogenous event, not a process action", a.name)),
                    Some(_) => {}
                }
            }
            Program::Test(f) => self.formula(f),
            Program::Seq(l, r) | Program::Conc(l, r) => {
                self.program(l);
                self.program(r);
            }
            Program::Choice(bs) => {
                for (g, body) in bs {
                    self.formula(g);
                    self.program(body);
                }
            }
            Program::While(c, body) => {
                self.formula(c);
                self.program(body);
            }
            Program::Star(body, _) | Program::Search(body, _) => self.program(body),
            Program::Pick(_, sort, body) => {
                if !self.domain.sorts.contains_key(sort.as_str()) {
                    self.errors.push(format!("unknown sort `{sort}`"));
                }
                self.program(body);
            }
            Program::Interrupts(is) => {
                for i in is {
                    self.formula(&i.trigger);
                    self.program(&mut i.body);
                }
            }
        }
    }

    fn formula(&mut self, f: &Formula) {
        match f {
            Formula::True | Formula::False | Formula::Eq(..) | Formula::Lt(..) => {}
            Formula::Not(g) => self.formula(g),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| self.formula(g)),
            Formula::Exists(_, sort, g) | Formula::Forall(_, sort, g) => {
                if !self.domain.sorts.contains_key(sort.as_str()) {
                    self.errors.push(format!("unknown sort `{sort}`"));
                }
                self.formula(g);
            }
            Formula::Atom(name, args) => {
                let n = args.len();
                let ok = self.domain.defines.get(name).is_some_and(|d| d.params.len() == n)
                    || STATIC_PREDICATES.contains(&(name.as_str(), n))
                    || self.domain.fluent_arity(name) == Some(n);
                if !ok {
                    let known = self.domain.fluent_arity(name).or_else(|| self.domain.defines.get(name).map(|d| d.params.len()));
                    match known {
                        Some(k) => self.errors.push(format!("fluent arity mismatch: `{name}` takes {k} arguments, got {n}")),
                        None => self.errors.push(format!("unknown fluent or predicate `{name}`")),
                    }
                }
            }
        }
    }

    fn member(&mut self, sort: &str, t: &Term) -> bool {
        match self.domain.sorts.get(sort) {
            None => {
                self.errors.push(format!("unknown sort `{sort}`"));
                false
            }
            Some(ms) if !ms.contains(t) => {
                self.errors.push(format!("undeclared {sort} `{t}`"));
                false
            }
            Some(_) => true,
        }
    }
}

fn resolve(mut b: Builder) -> Result<Scenario, ParseErrors> {
    let sorts = &mut b.domain.sorts;
    sorts.entry(SERVICE_SORT.into()).or_default();
    sorts.entry(CAPABILITY_SORT.into()).or_default();
    let task_names: Vec<Term> = b.domain.tasks.iter().map(|t| Term::sym(t.name.clone())).collect();
    sorts.insert(TASK_SORT.into(), task_names);

    let mut located: Vec<(Pos, String)> = Vec::new();
    let check_sorts = |d: &Domain, sorts: &[String], out: &mut Vec<String>| {
        for s in sorts {
            if !d.sorts.contains_key(s) {
                out.push(format!("unknown sort `{s}`"));
            }
        }
    };

    // capability tables
    for (svc, caps, pos) in std::mem::take(&mut b.provides) {
        let mut ck = Checker { domain: &b.domain, errors: vec![] };
        ck.member(SERVICE_SORT, &Term::sym(svc.clone()));
        for c in &caps {
            ck.member(CAPABILITY_SORT, &Term::sym(c.clone()));
        }
        located.extend(ck.errors.into_iter().map(|e| (Pos(pos.0, pos.1), e)));
        for c in caps {
            b.domain.provides.insert((svc.clone(), c));
        }
    }
    let mut global: Vec<String> = Vec::new();
    for t in &b.domain.tasks {
        for c in &t.requires {
            if !b.domain.sorts[CAPABILITY_SORT].contains(&Term::sym(c.clone())) {
                global.push(format!("task `{}` requires undeclared capability `{c}`", t.name));
            }
        }
        if let Some(s) = &t.input_sort {
            check_sorts(&b.domain, std::slice::from_ref(s), &mut global);
        }
    }
    for f in b.domain.fluents.values() {
        check_sorts(&b.domain, &f.sorts, &mut global);
    }
    for a in b.domain.actions.values() {
        let sorts: Vec<String> = a.params.iter().map(|(_, s)| s.clone()).collect();
        check_sorts(&b.domain, &sorts, &mut global);
        let mut ck = Checker { domain: &b.domain, errors: vec![] };
        ck.formula(&a.pre);
        global.extend(ck.errors);
    }
    for d in b.domain.defines.values() {
        let mut ck = Checker { domain: &b.domain, errors: vec![] };
        ck.formula(&d.body);
        global.extend(ck.errors);
    }
    for r in &b.domain.effects {
        let mut ck = Checker { domain: &b.domain, errors: vec![] };
        match b.domain.action_arity(&r.action) {
            None => ck.errors.push(format!("effect on unknown action `{}`", r.action)),
            Some(n) if n != r.pattern.len() => {
                ck.errors.push(format!("effect pattern for `{}` has {} arguments, expected {n}", r.action, r.pattern.len()))
            }
            _ => {}
        }
        for (_, s) in &r.foralls {
            if !b.domain.sorts.contains_key(s) {
                ck.errors.push(format!("unknown sort `{s}`"));
            }
        }
        ck.formula(&r.when);
        for lit in &r.effects {
            match b.domain.fluents.get(&lit.name) {
                None => ck.errors.push(format!("effect on undeclared fluent `{}`", lit.name)),
                Some(f) if f.sorts.len() != lit.args.len() => ck.errors.push(format!(
                    "fluent arity mismatch: `{}` takes {} arguments, got {}",
                    lit.name,
                    f.sorts.len(),
                    lit.args.len()
                )),
                _ => {}
            }
        }
        global.extend(ck.errors);
    }

    // initial assignment
    for (atom, pos) in &b.init {
        let mut ck = Checker { domain: &b.domain, errors: vec![] };
        match b.domain.fluents.get(&atom.name) {
            None => ck.errors.push(format!("init of undeclared fluent `{}`", atom.name)),
            Some(f) if f.sorts.len() != atom.args.len() => ck.errors.push(format!(
                "fluent arity mismatch: `{}` takes {} arguments, got {}",
                atom.name,
                f.sorts.len(),
                atom.args.len()
            )),
            Some(f) => {
                for (s, t) in f.sorts.iter().zip(&atom.args) {
                    ck.member(s, t);
                }
            }
        }
        located.extend(ck.errors.into_iter().map(|e| (Pos(pos.0, pos.1), e)));
    }

    // exogenous script
    for (ev, pos) in &b.script {
        let mut ck = Checker { domain: &b.domain, errors: vec![] };
        match b.domain.actions.get(&ev.action.name) {
            Some(decl) if decl.exogenous => {
                if decl.params.len() != ev.action.args.len() {
                    ck.errors.push(format!("`{}` takes {} arguments", decl.name, decl.params.len()));
                } else {
                    for ((_, s), t) in decl.params.iter().zip(&ev.action.args) {
                        ck.member(s, t);
                    }
                }
            }
            _ => ck.errors.push(format!("scripted event `{}` is not a declared exogenous action", ev.action.name)),
        }
        located.extend(ck.errors.into_iter().map(|e| (Pos(pos.0, pos.1), e)));
    }

    // programs
    let mut procs = b.domain.procs.clone();
    for (name, def) in procs.iter_mut() {
        let mut ck = Checker { domain: &b.domain, errors: vec![] };
        ck.program(&mut def.body);
        let pos = &b.proc_pos[name];
        located.extend(ck.errors.into_iter().map(|e| (Pos(pos.0, pos.1), format!("in proc `{name}`: {e}"))));
    }
    b.domain.procs = procs;
    let mut process = b.process.take().unwrap_or_else(|| {
        global.push("missing `process := ...` statement".into());
        Program::Nil
    });
    let mut ck = Checker { domain: &b.domain, errors: vec![] };
    ck.program(&mut process);
    global.extend(ck.errors.into_iter().map(|e| format!("in process: {e}")));

    // nodes
    let services = b.domain.services().to_vec();
    for (n, pos) in &b.nodes {
        if !services.contains(&Term::sym(n.name.clone())) {
            located.push((Pos(pos.0, pos.1), format!("undeclared service `{}`", n.name)));
        }
    }
    if !b.nodes.is_empty() && b.coordinator.is_none() {
        global.push("node layout declared without a `coordinator`".into());
    }

    let mut errors = std::mem::take(&mut b.errors);
    errors.extend(located.into_iter().map(|(p, m)| SyntaxError::new(p.0, p.1, m)));
    errors.extend(global.into_iter().map(|m| SyntaxError::new(0, 0, m)));
    if !errors.is_empty() {
        return Err(ParseErrors(errors));
    }
    let coordinator = b.coordinator.map(|(n, _)| n);
    let mut nodes: Vec<NodeDecl> = b.nodes.into_iter().map(|(n, _)| n).collect();
    let coordinator_name = coordinator.as_ref().map(|c| c.name.clone());
    if let Some(c) = coordinator {
        nodes.insert(0, c);
    }
    Ok(Scenario {
        domain: b.domain,
        initial: b.init.into_iter().map(|(a, _)| a).collect(),
        process,
        script: b.script.into_iter().map(|(e, _)| e).collect(),
        search_bound: b.search_bound.unwrap_or(DEFAULT_SEARCH_BOUND),
        seed: b.seed.unwrap_or(0),
        nodes,
        coordinator: coordinator_name,
        quality_good: b.quality_good.unwrap_or(true),
    })
}
