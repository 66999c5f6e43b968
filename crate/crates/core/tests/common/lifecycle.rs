//! One service, one task with two possible inputs, and hand-written tables
//! for each lifecycle fluent.

use std::collections::BTreeSet;

use adaptive_pms::lang::scenario::parse_scenario;
use adaptive_pms::sitcalc::progress;
use adaptive_pms::{ActionInstance, Atom, Domain, Term, WorldState};

pub const ONE: &str = "
    services a.
    capabilities c.
    sort inp = x1 x2.
    task t(inp) requires c.
    provides a: c.
    process := [].
";

pub fn domain() -> Domain {
    parse_scenario(ONE).unwrap().domain
}

pub fn k() -> Vec<Term> {
    vec![Term::sym("a"), Term::sym("t"), Term::sym("w")]
}

pub fn with(x: &str) -> Vec<Term> {
    let mut v = k();
    v.push(Term::sym(x));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Act {
    Assign,
    Start(usize),
    Ack,
    Release,
    Ready,
    Finished,
}

pub const INPUTS: [&str; 2] = ["x1", "x2"];
pub const ALL: [Act; 7] = [Act::Assign, Act::Start(0), Act::Start(1), Act::Ack, Act::Release, Act::Ready, Act::Finished];

pub fn instance(a: Act) -> ActionInstance {
    match a {
        Act::Assign => ActionInstance::new("assign", k()),
        Act::Start(i) => ActionInstance::new("start", with(INPUTS[i])),
        Act::Ack => ActionInstance::new("ackTaskCompletion", k()),
        Act::Release => ActionInstance::new("release", k()),
        Act::Ready => ActionInstance::new("readyToStartTask", k()),
        Act::Finished => ActionInstance::new("finishedTask", with("none")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub free: bool,
    pub enabled: bool,
    pub started: [bool; 2],
}

pub fn read(s: &WorldState) -> Row {
    Row {
        free: s.fact("free", vec![Term::sym("a")]),
        enabled: s.fact("enabled", k()),
        started: [s.fact("started", with("x1")), s.fact("started", with("x2"))],
    }
}

/// The tables: which action sets, clears or keeps each fluent.
pub fn expect(r: Row, a: Act) -> Row {
    let free = match a {
        Act::Assign => false,
        Act::Release => true,
        _ => r.free,
    };
    let enabled = match a {
        Act::Finished => false,
        Act::Ready => true,
        _ => r.enabled,
    };
    let none_started = !r.started[0] && !r.started[1];
    let started = match a {
        Act::Ack => [false, false],
        Act::Start(i) if none_started => {
            let mut s = [false, false];
            s[i] = true;
            s
        }
        _ => r.started,
    };
    Row { free, enabled, started }
}

pub fn state(bits: u32) -> WorldState {
    let mut atoms = BTreeSet::new();
    let flag = |i: u32| bits & (1 << i) != 0;
    if flag(0) {
        atoms.insert(Atom::new("free", vec![Term::sym("a")]));
    }
    if flag(1) {
        atoms.insert(Atom::new("enabled", k()));
    }
    if flag(2) {
        atoms.insert(Atom::new("started", with("x1")));
    }
    if flag(3) {
        atoms.insert(Atom::new("started", with("x2")));
    }
    if flag(4) {
        atoms.insert(Atom::new("assigned", k()));
    }
    if flag(5) {
        atoms.insert(Atom::new("acked", k()));
    }
    WorldState::new(atoms)
}

/// Checks every valuation and every action sequence of length up to
/// `depth` from the initial state. Returns the number of transitions checked.
pub fn check_tables(depth: u32) -> Result<usize, String> {
    let d = domain();
    let mut checked = 0;
    for bits in 0..64 {
        let s = state(bits);
        for a in ALL {
            let next = progress(&d, &s, &instance(a)).map_err(|e| e.to_string())?;
            if read(&next) != expect(read(&s), a) {
                return Err(format!("{a:?} from {:?}", s.fluents));
            }
            checked += 1;
        }
    }
    let init = parse_scenario(ONE).unwrap().initial_state();
    let row = read(&init);
    let mut frontier = vec![(init, row)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (s, row) in &frontier {
            for a in ALL {
                let s2 = progress(&d, s, &instance(a)).map_err(|e| e.to_string())?;
                let r2 = expect(*row, a);
                if read(&s2) != r2 {
                    return Err(format!("after {:?}", s2.history));
                }
                checked += 1;
                next.push((s2, r2));
            }
        }
        frontier = next;
    }
    Ok(checked)
}
