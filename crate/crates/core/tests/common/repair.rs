//! Shortest repair by breadth-first search over whole task invocations,
//! bypassing the program interpreter.

use std::collections::{BTreeSet, HashSet};

use adaptive_pms::interp::{Interpreter, Responder};
use adaptive_pms::monitor::{recover, ACTIONS_PER_INVOCATION};
use adaptive_pms::sitcalc::{poss, progress, same_state, ACK, ASSIGN, FINISHED, READY, RELEASE, START};
use adaptive_pms::{ActionInstance, Atom, Domain, Scenario, Term, WorldState};
use rand::seq::SliceRandom;
use rand::Rng;

use super::rng;

const ID: &str = "bfs";

/// The six actions of one nominal invocation, or `None` if a PMS action is impossible.
fn invoke(domain: &Domain, s: &WorldState, svc: &Term, task: &str, input: &Term) -> Option<WorldState> {
    let item = Term::App("workitem".into(), vec![Term::sym(task), Term::sym(ID), input.clone()]);
    if !domain.capable(svc.as_sym()?, &[item]).ok()? {
        return None;
    }
    let out = domain.task(task)?.nominal_output();
    let k = vec![svc.clone(), Term::sym(task), Term::sym(ID)];
    let with = |extra: &Term| {
        let mut v = k.clone();
        v.push(extra.clone());
        v
    };
    let seq = [
        ActionInstance::new(ASSIGN, k.clone()),
        ActionInstance::new(READY, k.clone()),
        ActionInstance::new(START, with(input)),
        ActionInstance::new(FINISHED, with(&out)),
        ActionInstance::new(ACK, k.clone()),
        ActionInstance::new(RELEASE, k.clone()),
    ];
    let mut cur = s.snapshot();
    for a in &seq {
        if !poss(domain, &cur, a).ok()? {
            return None;
        }
        cur = progress(domain, &cur, a).ok()?;
    }
    Some(cur)
}

/// Fewest invocations (at most `bound`) from `actual` to a state equal to `expected`.
pub fn optimum(domain: &Domain, expected: &WorldState, actual: &WorldState, bound: usize) -> Option<usize> {
    let mut seen: HashSet<BTreeSet<Atom>> = HashSet::new();
    seen.insert(actual.fluents.clone());
    let mut layer = vec![actual.snapshot()];
    for depth in 0..=bound {
        if layer.iter().any(|s| same_state(s, expected)) {
            return Some(depth);
        }
        let mut next = Vec::new();
        for s in &layer {
            for t in &domain.tasks {
                let inputs = match &t.input_sort {
                    Some(sort) => domain.sort(sort).unwrap().to_vec(),
                    None => vec![Term::none()],
                };
                for svc in domain.services() {
                    for i in &inputs {
                        if let Some(s2) = invoke(domain, s, svc, &t.name, i) {
                            if seen.insert(s2.fluents.clone()) {
                                next.push(s2);
                            }
                        }
                    }
                }
            }
        }
        layer = next;
    }
    None
}

pub const FLUENTS: [&str; 3] = ["powered", "sealed", "calibrated"];

/// The three repair fluents as given, and optionally one service busy with a
/// started main-process item.
pub fn state(scn: &Scenario, on: [bool; 3], busy: Option<(&str, &str)>) -> WorldState {
    let mut atoms: BTreeSet<Atom> = scn.initial_state().fluents;
    for (f, v) in FLUENTS.iter().zip(on) {
        let a = Atom::new(*f, vec![]);
        if v {
            atoms.insert(a);
        } else {
            atoms.remove(&a);
        }
    }
    if let Some((svc, task)) = busy {
        let k = vec![Term::sym(svc), Term::sym(task), Term::sym("w1")];
        atoms.remove(&Atom::new("free", vec![Term::sym(svc)]));
        atoms.insert(Atom::new("assigned", k.clone()));
        let mut started = k;
        started.push(Term::none());
        atoms.insert(Atom::new("started", started));
    }
    WorldState::new(atoms)
}

pub struct Case {
    pub expected: WorldState,
    pub actual: WorldState,
}

pub fn cases(scn: &Scenario, n: usize) -> Vec<Case> {
    let busy = [None, Some(("m1", "restorePower")), Some(("m2", "reseal")), Some(("m3", "recalibrate"))];
    let mut out = Vec::new();
    let mut r = rng(77);
    while out.len() < n {
        let e: [bool; 3] = [r.gen(), r.gen(), r.gen()];
        // Events mostly clear fluents; every fifth pair is arbitrary.
        let a: [bool; 3] = if r.gen_ratio(4, 5) {
            [e[0] && r.gen(), e[1] && r.gen(), e[2] && r.gen()]
        } else {
            [r.gen(), r.gen(), r.gen()]
        };
        if e == a {
            continue;
        }
        let b = *busy.choose(&mut r).unwrap();
        out.push(Case { expected: state(scn, e, b), actual: state(scn, a, b) });
    }
    out
}

pub fn counter() -> impl FnMut() -> String {
    let mut n = 0;
    move || {
        n += 1;
        format!("rec{n}")
    }
}

/// Runs `recover` on every seeded case and compares it with the brute-force
/// optimum; every plan found is replayed from the actual state. Returns the
/// number of cases with and without a plan.
pub fn check_cases(scn: &Scenario, n: usize, bound: u32) -> Result<(usize, usize), String> {
    let (mut found, mut none) = (0, 0);
    for (i, c) in cases(scn, n).iter().enumerate() {
        let plan = recover(&scn.domain, &c.expected, &c.actual, bound, &mut counter()).map_err(|e| e.to_string())?;
        let best = optimum(&scn.domain, &c.expected, &c.actual, bound as usize);
        let got = plan.as_ref().map(|p| p.items.len());
        if got != best {
            return Err(format!("case {i}: plan length {got:?}, optimum {best:?}"));
        }
        let Some(plan) = plan else {
            none += 1;
            continue;
        };
        found += 1;
        if plan.prefix.has_concurrency() {
            return Err(format!("case {i}: concurrent prefix"));
        }
        let ids: BTreeSet<Term> = plan.items.iter().map(|(_, w)| Term::sym(w.id.clone())).collect();
        let interp = Interpreter::new(&scn.domain).with_responder(Responder::Only(ids));
        let accept = |i: &Interpreter, p: &_, s: &WorldState| i.is_final(p, s);
        let max = plan.items.len() * ACTIONS_PER_INVOCATION;
        let run = interp.do_offline(&plan.prefix, &c.actual, max, &accept).map_err(|e| e.to_string())?;
        match run {
            Some(run) if same_state(&run.state, &c.expected) && run.actions.len() == max => {}
            _ => return Err(format!("case {i}: prefix {} does not replay to the expected state", plan.prefix)),
        }
    }
    Ok((found, none))
}
