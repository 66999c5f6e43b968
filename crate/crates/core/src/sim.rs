//! Discrete-time environment simulator: mobile service nodes on a grid, a
//! radio link graph rooted at the coordinator, task execution and scripted
//! exogenous events.
//!
//! Time advances one tick per [`SimWorld::env_step`]: once for every PMS
//! action pushed and once for every idle wait.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::scenario::{NodeDecl, Scenario, ScriptedEvent};
use crate::sitcalc::{Domain, TaskBehavior, TaskOutput, ASSIGN, FINISHED, READY, START};
use crate::term::{ActionInstance, Term};

pub const DISCONNECT: &str = "disconnect";
pub const RECONNECT: &str = "reconnect";
pub const MOVE_TO: &str = "moveTo";
pub const SET_QUALITY: &str = "setQuality";

/// Interface between the engine and whatever executes PMS actions.
pub trait EnvironmentPort {
    /// Hands over a PMS action chosen by the process.
    fn push(&mut self, action: &ActionInstance);
    /// Drains events that arrived since the last call, oldest first.
    fn pull(&mut self) -> Vec<ActionInstance>;
    /// Lets time pass. Returns `false` when the environment is idle and nothing will ever arrive.
    fn wait(&mut self) -> bool;
    fn tick(&self) -> u64;
}

pub fn chebyshev(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub pos: (i64, i64),
    pub range: i64,
    pub speed: i64,
    pub online: bool,
}

impl Node {
    fn from_decl(d: &NodeDecl) -> Self {
        Node { name: d.name.clone(), pos: d.pos, range: d.range, speed: d.speed, online: true }
    }

    /// One tick of movement towards `target`; each axis moves by up to `speed`.
    fn step_towards(&mut self, target: (i64, i64)) {
        let step = |from: i64, to: i64, v: i64| from + (to - from).clamp(-v, v);
        self.pos = (step(self.pos.0, target.0, self.speed), step(self.pos.1, target.1, self.speed));
    }
}

/// Undirected link graph: two online nodes are linked when their distance is
/// within the smaller of their ranges.
#[derive(Debug, Clone)]
pub struct LinkGraph {
    reachable: BTreeSet<String>,
}

impl LinkGraph {
    pub fn build<'a>(nodes: impl IntoIterator<Item = &'a Node>, coordinator: Option<&str>) -> Self {
        let nodes: Vec<&Node> = nodes.into_iter().filter(|n| n.online).collect();
        let mut reachable = BTreeSet::new();
        let Some(root) = coordinator else { return LinkGraph { reachable } };
        if !nodes.iter().any(|n| n.name == root) {
            return LinkGraph { reachable };
        }
        let mut queue = VecDeque::from([root.to_string()]);
        reachable.insert(root.to_string());
        while let Some(cur) = queue.pop_front() {
            let a = nodes.iter().find(|n| n.name == cur).expect("node in graph");
            for b in &nodes {
                if !reachable.contains(&b.name) && chebyshev(a.pos, b.pos) <= a.range.min(b.range) {
                    reachable.insert(b.name.clone());
                    queue.push_back(b.name.clone());
                }
            }
        }
        LinkGraph { reachable }
    }

    /// Link graph of the declared layout with the `offline` nodes removed.
    pub fn from_decls(decls: &[NodeDecl], coordinator: Option<&str>, offline: &BTreeSet<String>) -> Self {
        let nodes: Vec<Node> = decls
            .iter()
            .map(|d| Node { online: !offline.contains(&d.name), ..Node::from_decl(d) })
            .collect();
        LinkGraph::build(&nodes, coordinator)
    }

    /// A path to the coordinator exists.
    pub fn connected(&self, name: &str) -> bool {
        self.reachable.contains(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum JobKind {
    Timed(u32),
    Move((i64, i64)),
    Follow(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Job {
    service: Term,
    task: Term,
    id: Term,
    output: Term,
    kind: JobKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Outgoing {
    stamp: u64,
    sender: Option<String>,
    action: ActionInstance,
}

/// Simulated world. Reports sent by a node that has no path to the
/// coordinator are held back until it reconnects.
pub struct SimWorld {
    domain: Domain,
    tick: u64,
    nodes: BTreeMap<String, Node>,
    coordinator: Option<String>,
    track_connectivity: bool,
    /// Connectivity as last communicated to the process.
    reported: BTreeMap<String, bool>,
    jobs: Vec<Job>,
    outbox: Vec<Outgoing>,
    inbox: Vec<ActionInstance>,
    script: Vec<ScriptedEvent>,
    next_event: usize,
    quality_good: bool,
    rng: ChaCha8Rng,
}

impl SimWorld {
    pub fn new(scn: &Scenario, seed: u64) -> Self {
        let nodes: BTreeMap<String, Node> = scn.nodes.iter().map(|d| (d.name.clone(), Node::from_decl(d))).collect();
        let track = scn.derives_connectivity();
        let mut sim = SimWorld {
            domain: scn.domain.clone(),
            tick: 0,
            nodes,
            coordinator: scn.coordinator.clone(),
            track_connectivity: track,
            reported: BTreeMap::new(),
            jobs: Vec::new(),
            outbox: Vec::new(),
            inbox: Vec::new(),
            script: Vec::new(),
            next_event: 0,
            quality_good: scn.quality_good,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let graph = sim.graph();
        for s in scn.domain.services() {
            if let Some(n) = s.as_sym() {
                sim.reported.insert(n.to_string(), graph.connected(n));
            }
        }
        let mut script = scn.script.clone();
        script.sort_by_key(|e| e.tick);
        sim.script = script;
        sim
    }

    /// Adds a scripted event; events at the same tick keep insertion order.
    pub fn inject(&mut self, ev: ScriptedEvent) {
        let at = self.script[self.next_event..].iter().position(|e| e.tick > ev.tick).map(|i| i + self.next_event);
        match at {
            Some(i) => self.script.insert(i, ev),
            None => self.script.push(ev),
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.get(name)
    }

    pub fn graph(&self) -> LinkGraph {
        LinkGraph::build(self.nodes.values(), self.coordinator.as_deref())
    }

    /// A sender without a node (no layout) can always reach the coordinator.
    pub fn connected(&self, name: &str) -> bool {
        !self.nodes.contains_key(name) || self.graph().connected(name)
    }

    fn send(&mut self, stamp: u64, sender: &Term, action: ActionInstance) {
        let sender = sender.as_sym().filter(|s| self.nodes.contains_key(*s)).map(str::to_string);
        self.outbox.push(Outgoing { stamp, sender, action });
    }

    fn accept(&mut self, a: &ActionInstance) {
        match a.name.as_str() {
            ASSIGN => {
                let stamp = self.tick + 1;
                self.send(stamp, &a.args[0].clone(), ActionInstance::new(READY, a.args.clone()));
            }
            START => {
                let (service, task, id, input) = (&a.args[0], &a.args[1], &a.args[2], &a.args[3]);
                let decl = task.as_sym().and_then(|t| self.domain.task(t)).cloned();
                let Some(decl) = decl else { return };
                let output = match &decl.output {
                    TaskOutput::Fixed(t) => t.clone(),
                    TaskOutput::Quality => Term::sym(if self.quality_good { "good" } else { "bad" }),
                };
                let kind = match decl.behavior {
                    TaskBehavior::Move if input.as_loc().is_some() => JobKind::Move(input.as_loc().unwrap()),
                    TaskBehavior::Follow if input.as_sym().is_some() => JobKind::Follow(input.as_sym().unwrap().into()),
                    _ => JobKind::Timed(decl.duration.unwrap_or_else(|| self.rng.gen_range(1..=3))),
                };
                self.jobs.push(Job { service: service.clone(), task: task.clone(), id: id.clone(), output, kind });
            }
            _ => {}
        }
    }

    fn apply_scripted(&mut self, a: &ActionInstance) {
        let target = a.args.first().and_then(|t| t.as_sym()).map(str::to_string);
        match (a.name.as_str(), target) {
            (DISCONNECT, Some(s)) => {
                if let Some(n) = self.nodes.get_mut(&s) {
                    n.online = false;
                }
                if !self.track_connectivity {
                    self.inbox.push(a.clone());
                }
            }
            (RECONNECT, Some(s)) => {
                if let Some(n) = self.nodes.get_mut(&s) {
                    n.online = true;
                }
                if !self.track_connectivity {
                    self.inbox.push(a.clone());
                }
            }
            (MOVE_TO, Some(s)) => {
                if let (Some(n), Some(p)) = (self.nodes.get_mut(&s), a.args.get(1).and_then(Term::as_loc)) {
                    n.pos = p;
                }
                self.inbox.push(a.clone());
            }
            (SET_QUALITY, _) => {
                self.quality_good = a.args.first() == Some(&Term::sym("good"));
                self.inbox.push(a.clone());
            }
            _ => self.inbox.push(a.clone()),
        }
    }

    fn advance_jobs(&mut self) {
        let mut done = Vec::new();
        for (i, job) in self.jobs.iter_mut().enumerate() {
            let svc = job.service.as_sym().unwrap_or_default().to_string();
            let finished = match &mut job.kind {
                JobKind::Timed(left) => {
                    *left = left.saturating_sub(1);
                    *left == 0
                }
                JobKind::Move(target) => match self.nodes.get_mut(&svc) {
                    Some(n) => {
                        n.step_towards(*target);
                        n.pos == *target
                    }
                    None => true,
                },
                JobKind::Follow(leader) => {
                    let goal = self.nodes.get(leader.as_str()).map(|n| n.pos);
                    match (goal, self.nodes.get_mut(&svc)) {
                        (Some(goal), Some(n)) => {
                            if chebyshev(n.pos, goal) > 1 {
                                n.step_towards(goal);
                            }
                            chebyshev(n.pos, goal) <= 1
                        }
                        _ => true,
                    }
                }
            };
            if finished {
                done.push(i);
            }
        }
        for i in done.into_iter().rev() {
            let job = self.jobs.remove(i);
            if let JobKind::Follow(leader) = &job.kind {
                // The relay restores the leader's link; the report itself says so.
                if let Some(n) = self.nodes.get_mut(leader) {
                    n.online = true;
                }
                let graph = self.graph();
                if graph.connected(leader) {
                    self.reported.insert(leader.clone(), true);
                }
            }
            let stamp = self.tick;
            let report = ActionInstance::new(FINISHED, vec![job.service.clone(), job.task, job.id, job.output]);
            self.send(stamp, &job.service, report);
        }
    }

    fn connectivity_events(&mut self) {
        if !self.track_connectivity {
            return;
        }
        let graph = self.graph();
        for (name, was) in self.reported.iter_mut() {
            let now = graph.connected(name);
            if now != *was {
                *was = now;
                let kind = if now { RECONNECT } else { DISCONNECT };
                if self.domain.is_exogenous(kind) {
                    self.inbox.push(ActionInstance::new(kind, vec![Term::sym(name.clone())]));
                }
            }
        }
    }

    fn deliver(&mut self) {
        let graph = self.graph();
        let tick = self.tick;
        let nodes = &self.nodes;
        let deliverable = |o: &Outgoing| {
            o.stamp <= tick && o.sender.as_ref().is_none_or(|s| !nodes.contains_key(s) || graph.connected(s))
        };
        let (now, later): (Vec<Outgoing>, Vec<Outgoing>) = self.outbox.drain(..).partition(deliverable);
        self.outbox = later;
        self.inbox.extend(now.into_iter().map(|o| o.action));
    }

    /// Advances one tick, optionally accepting a PMS action first.
    pub fn env_step(&mut self, pushed: Option<&ActionInstance>) {
        if let Some(a) = pushed {
            self.accept(a);
        }
        self.tick += 1;
        while self.next_event < self.script.len() && self.script[self.next_event].tick <= self.tick {
            let a = self.script[self.next_event].action.clone();
            self.next_event += 1;
            self.apply_scripted(&a);
        }
        self.advance_jobs();
        self.connectivity_events();
        self.deliver();
    }

    /// Nothing is running, scheduled or deliverable, so nothing can change.
    pub fn idle(&self) -> bool {
        self.inbox.is_empty()
            && self.jobs.is_empty()
            && self.next_event >= self.script.len()
            && self.outbox.iter().all(|o| o.stamp <= self.tick)
    }
}

impl EnvironmentPort for SimWorld {
    fn push(&mut self, action: &ActionInstance) {
        self.env_step(Some(action));
    }

    fn pull(&mut self) -> Vec<ActionInstance> {
        std::mem::take(&mut self.inbox)
    }

    fn wait(&mut self) -> bool {
        if self.idle() {
            return false;
        }
        self.env_step(None);
        true
    }

    fn tick(&self) -> u64 {
        self.tick
    }
}
