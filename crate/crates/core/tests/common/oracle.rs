//! Brute-force executor for the semantics scenario, written against its own
//! state model and a continuation stack instead of program rewriting.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use adaptive_pms::lang::ast::{Formula, Interrupt, Program};
use adaptive_pms::term::Bindings;
use adaptive_pms::{Term, WorldState};

use super::{Traces, SERVICES};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct St {
    pub on: BTreeSet<String>,
    pub q: bool,
}

impl St {
    pub fn from_world(w: &WorldState) -> St {
        let mut on = BTreeSet::new();
        let mut q = false;
        for a in &w.fluents {
            match (a.name.as_str(), a.args.as_slice()) {
                ("p", [Term::Sym(s)]) => {
                    on.insert(s.clone());
                }
                ("q", []) => q = true,
                _ => {}
            }
        }
        St { on, q }
    }
}

fn sym(t: &Term) -> String {
    match t {
        Term::Sym(s) => s.clone(),
        other => panic!("oracle: non-ground service {other}"),
    }
}

fn eval(f: &Formula, s: &St) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(n, args) if n == "q" && args.is_empty() => s.q,
        Formula::Atom(n, args) if n == "p" && args.len() == 1 => s.on.contains(&sym(&args[0])),
        Formula::Not(g) => !eval(g, s),
        Formula::And(gs) => gs.iter().all(|g| eval(g, s)),
        Formula::Or(gs) => gs.iter().any(|g| eval(g, s)),
        Formula::Exists(v, sort, g) if sort == "service" => SERVICES.iter().any(|m| eval(&bind_f(g, v, m), s)),
        Formula::Forall(v, sort, g) if sort == "service" => SERVICES.iter().all(|m| eval(&bind_f(g, v, m), s)),
        other => panic!("oracle: unsupported formula {other}"),
    }
}

fn env(v: &str, m: &str) -> Bindings {
    [(v.to_string(), Term::sym(m))].into_iter().collect()
}

fn bind_f(f: &Formula, v: &str, m: &str) -> Formula {
    f.subst(&env(v, m))
}

/// The action's label and the successor, or `None` if it is not possible.
fn apply(name: &str, args: &[Term], s: &St) -> Option<(String, St)> {
    let mut n = s.clone();
    let label = match (name, args) {
        ("on", [t]) => {
            let a = sym(t);
            if !n.on.insert(a.clone()) {
                return None;
            }
            format!("on({a})")
        }
        ("off", [t]) => {
            let a = sym(t);
            if !n.on.remove(&a) {
                return None;
            }
            format!("off({a})")
        }
        ("tog", []) => {
            n.q = !n.q;
            "tog".into()
        }
        ("noop", []) => "noop".into(),
        other => panic!("oracle: unknown action {other:?}"),
    };
    Some((label, n))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Item {
    P(Program),
    Loop(Formula, Program),
    Rep(Program, u32),
    Par(Vec<Item>, Vec<Item>),
    Srch(Vec<Item>, u32),
    Intr(Vec<Interrupt>),
}

type Stack = Vec<Item>;
type Step = (Option<String>, Stack, St);

pub struct Oracle {
    procs: BTreeMap<String, (Vec<String>, Program)>,
}

impl Oracle {
    pub fn new(domain: &adaptive_pms::Domain) -> Self {
        let procs = domain.procs.iter().map(|(n, d)| (n.clone(), (d.params.clone(), d.body.clone()))).collect();
        Oracle { procs }
    }

    fn call(&self, name: &str, args: &[Term]) -> Program {
        let (params, body) = &self.procs[name];
        let e: Bindings = params.iter().cloned().zip(args.iter().cloned()).collect();
        body.subst(&e)
    }

    fn nullable_item(&self, it: &Item, s: &St) -> bool {
        match it {
            Item::P(p) => self.nullable_prog(p, s),
            Item::Loop(c, b) => !eval(c, s) || self.nullable_prog(b, s),
            Item::Rep(..) => true,
            Item::Par(a, b) => self.nullable(a, s) && self.nullable(b, s),
            Item::Srch(inner, _) => self.nullable(inner, s),
            Item::Intr(is) => !is.iter().any(|i| eval(&i.trigger, s)),
        }
    }

    fn nullable_prog(&self, p: &Program, s: &St) -> bool {
        match p {
            Program::Nil | Program::Star(..) => true,
            Program::Act(_) | Program::Test(_) => false,
            Program::Seq(l, r) | Program::Conc(l, r) => self.nullable_prog(l, s) && self.nullable_prog(r, s),
            Program::Choice(bs) => bs.iter().any(|(g, b)| eval(g, s) && self.nullable_prog(b, s)),
            Program::While(c, b) => !eval(c, s) || self.nullable_prog(b, s),
            Program::Search(b, _) => self.nullable_prog(b, s),
            Program::Pick(v, _, b) => SERVICES.iter().any(|m| self.nullable_prog(&b.subst(&env(v, m)), s)),
            Program::ProcCall(n, args) => self.nullable_prog(&self.call(n, args), s),
            Program::Interrupts(is) => !is.iter().any(|i| eval(&i.trigger, s)),
        }
    }

    fn nullable(&self, st: &[Item], s: &St) -> bool {
        st.iter().all(|it| self.nullable_item(it, s))
    }

    fn steps(&self, st: &[Item], s: &St) -> Vec<Step> {
        let Some((head, rest)) = st.split_first() else { return vec![] };
        let mut out: Vec<Step> = self
            .item_steps(head, s)
            .into_iter()
            .map(|(a, mut res, s2)| {
                res.extend_from_slice(rest);
                (a, res, s2)
            })
            .collect();
        if self.nullable_item(head, s) {
            out.extend(self.steps(rest, s));
        }
        out
    }

    fn then(steps: Vec<Step>, tail: Item) -> Vec<Step> {
        steps
            .into_iter()
            .map(|(a, mut res, s2)| {
                res.push(tail.clone());
                (a, res, s2)
            })
            .collect()
    }

    fn item_steps(&self, it: &Item, s: &St) -> Vec<Step> {
        match it {
            Item::P(p) => self.prog_steps(p, s),
            Item::Loop(c, b) => {
                if eval(c, s) {
                    Self::then(self.prog_steps(b, s), it.clone())
                } else {
                    vec![]
                }
            }
            Item::Rep(b, n) => {
                let st = self.prog_steps(b, s);
                if *n > 1 {
                    Self::then(st, Item::Rep(b.clone(), n - 1))
                } else {
                    st
                }
            }
            Item::Par(l, r) => {
                let mut out = Vec::new();
                for (a, l2, s2) in self.steps(l, s) {
                    out.push((a, vec![Item::Par(l2, r.clone())], s2));
                }
                for (a, r2, s2) in self.steps(r, s) {
                    out.push((a, vec![Item::Par(l.clone(), r2)], s2));
                }
                out
            }
            Item::Srch(inner, n) => self
                .steps(inner, s)
                .into_iter()
                .filter(|(_, res, s2)| self.can_complete(res, s2, *n as usize))
                .map(|(a, res, s2)| (a, vec![Item::Srch(res, *n)], s2))
                .collect(),
            Item::Intr(is) => {
                let mut order: Vec<&Interrupt> = is.iter().collect();
                order.sort_by_key(|i| i.priority);
                for i in order {
                    if !eval(&i.trigger, s) {
                        continue;
                    }
                    let st = self.prog_steps(&i.body, s);
                    if !st.is_empty() {
                        return Self::then(st, it.clone());
                    }
                }
                vec![]
            }
        }
    }

    fn prog_steps(&self, p: &Program, s: &St) -> Vec<Step> {
        match p {
            Program::Nil => vec![],
            Program::Act(a) => match apply(&a.name, &a.args, s) {
                Some((label, s2)) => vec![(Some(label), vec![], s2)],
                None => vec![],
            },
            Program::Test(f) => {
                if eval(f, s) {
                    vec![(None, vec![], s.clone())]
                } else {
                    vec![]
                }
            }
            Program::Seq(l, r) => self.steps(&[Item::P((**l).clone()), Item::P((**r).clone())], s),
            Program::Choice(bs) => {
                let mut out = Vec::new();
                for (g, b) in bs {
                    if *g == Formula::True {
                        out.extend(self.prog_steps(b, s));
                    } else if eval(g, s) {
                        out.push((None, vec![Item::P(b.clone())], s.clone()));
                    }
                }
                out
            }
            Program::While(c, b) => self.item_steps(&Item::Loop(c.clone(), (**b).clone()), s),
            Program::Conc(l, r) => self.item_steps(&Item::Par(vec![Item::P((**l).clone())], vec![Item::P((**r).clone())]), s),
            Program::Star(b, n) => {
                if *n == 0 {
                    vec![]
                } else {
                    self.item_steps(&Item::Rep((**b).clone(), *n), s)
                }
            }
            Program::Search(b, n) => self.item_steps(&Item::Srch(vec![Item::P((**b).clone())], *n), s),
            Program::Pick(v, _, b) => SERVICES.iter().flat_map(|m| self.prog_steps(&b.subst(&env(v, m)), s)).collect(),
            Program::ProcCall(n, args) => self.prog_steps(&self.call(n, args), s),
            Program::Interrupts(is) => self.item_steps(&Item::Intr(is.clone()), s),
        }
    }

    /// Some completion of `st` uses at most `n` actions.
    fn can_complete(&self, st: &[Item], s: &St, n: usize) -> bool {
        let mut seen = HashSet::new();
        self.reach(st.to_vec(), s.clone(), n, &mut seen)
    }

    fn reach(&self, st: Stack, s: St, n: usize, seen: &mut HashSet<(Stack, St, usize)>) -> bool {
        if !seen.insert((st.clone(), s.clone(), n)) {
            return false;
        }
        if self.nullable(&st, &s) {
            return true;
        }
        for (a, res, s2) in self.steps(&st, &s) {
            let k = match a {
                Some(_) if n == 0 => continue,
                Some(_) => n - 1,
                None => n,
            };
            if self.reach(res, s2, k, seen) {
                return true;
            }
        }
        false
    }

    pub fn traces(&self, p: &Program, s: &WorldState, max_len: usize) -> Traces {
        let mut out = Traces::default();
        let mut seen: HashSet<(Stack, St, Vec<String>)> = HashSet::new();
        let mut todo = vec![(vec![Item::P(p.clone())], St::from_world(s), Vec::<String>::new())];
        while let Some((st, s, tr)) = todo.pop() {
            if !seen.insert((st.clone(), s.clone(), tr.clone())) {
                continue;
            }
            if self.nullable(&st, &s) {
                out.complete.insert(tr.clone());
            }
            out.prefixes.insert(tr.clone());
            for (a, res, s2) in self.steps(&st, &s) {
                match a {
                    None => todo.push((res, s2, tr.clone())),
                    Some(l) if tr.len() < max_len => {
                        let mut t = tr.clone();
                        t.push(l);
                        todo.push((res, s2, t));
                    }
                    Some(_) => {}
                }
            }
        }
        out
    }
}
