use std::fmt;

use crate::term::{ActionInstance, Atom, Bindings, Term};

/// An action call inside a program; arguments may still contain variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionTemplate {
    pub name: String,
    pub args: Vec<Term>,
}

impl ActionTemplate {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        ActionTemplate { name: name.into(), args }
    }

    pub fn subst(&self, env: &Bindings) -> Self {
        ActionTemplate { name: self.name.clone(), args: self.args.iter().map(|t| t.subst(env)).collect() }
    }

    /// The ground instance, or `None` if a variable is left unbound.
    pub fn ground(&self) -> Option<ActionInstance> {
        let args: Vec<Term> = self.args.iter().map(|t| t.subst(&Bindings::new())).collect();
        args.iter().all(Term::is_ground).then(|| ActionInstance::new(self.name.clone(), args))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Lt(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, String, Box<Formula>),
    Forall(String, String, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom(name.into(), args)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn subst(&self, env: &Bindings) -> Formula {
        let sub = |ts: &[Term]| ts.iter().map(|t| t.subst(env)).collect::<Vec<_>>();
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(n, args) => Formula::Atom(n.clone(), sub(args)),
            Formula::Eq(a, b) => Formula::Eq(a.subst(env), b.subst(env)),
            Formula::Lt(a, b) => Formula::Lt(a.subst(env), b.subst(env)),
            Formula::Not(f) => Formula::Not(Box::new(f.subst(env))),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.subst(env)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.subst(env)).collect()),
            Formula::Exists(v, s, f) | Formula::Forall(v, s, f) => {
                let mut inner = env.clone();
                inner.remove(v);
                let body = Box::new(f.subst(&inner));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(v.clone(), s.clone(), body)
                } else {
                    Formula::Forall(v.clone(), s.clone(), body)
                }
            }
        }
    }

    pub fn from_atom(a: &Atom) -> Self {
        Formula::Atom(a.name.clone(), a.args.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interrupt {
    pub priority: i64,
    pub trigger: Formula,
    pub body: Program,
}

/// A process program. One variant per construct of the process language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    Nil,
    Act(ActionTemplate),
    Test(Formula),
    Seq(Box<Program>, Box<Program>),
    Choice(Vec<(Formula, Program)>),
    While(Formula, Box<Program>),
    Conc(Box<Program>, Box<Program>),
    Star(Box<Program>, u32),
    Search(Box<Program>, u32),
    Pick(String, String, Box<Program>),
    ProcCall(String, Vec<Term>),
    /// Prioritized interrupts; lower `priority` value fires first.
    Interrupts(Vec<Interrupt>),
}

impl Program {
    pub fn act(name: impl Into<String>, args: Vec<Term>) -> Self {
        Program::Act(ActionTemplate::new(name, args))
    }

    /// Sequential composition that drops `Nil` on either side.
    pub fn seq(left: Program, right: Program) -> Self {
        match (left, right) {
            (Program::Nil, r) => r,
            (l, Program::Nil) => l,
            (l, r) => Program::Seq(Box::new(l), Box::new(r)),
        }
    }

    /// Right-nested sequence of all items; `Nil` for an empty list.
    pub fn seq_all(items: impl IntoIterator<Item = Program>) -> Self {
        let items: Vec<Program> = items.into_iter().collect();
        items.into_iter().rev().fold(Program::Nil, |acc, p| Program::seq(p, acc))
    }

    pub fn conc(left: Program, right: Program) -> Self {
        match (left, right) {
            (Program::Nil, r) => r,
            (l, Program::Nil) => l,
            (l, r) => Program::Conc(Box::new(l), Box::new(r)),
        }
    }

    pub fn subst(&self, env: &Bindings) -> Program {
        if env.is_empty() {
            return self.clone();
        }
        let shadow = |v: &str| {
            let mut inner = env.clone();
            inner.remove(v);
            inner
        };
        match self {
            Program::Nil => Program::Nil,
            Program::Act(a) => Program::Act(a.subst(env)),
            Program::Test(f) => Program::Test(f.subst(env)),
            Program::Seq(l, r) => Program::Seq(Box::new(l.subst(env)), Box::new(r.subst(env))),
            Program::Choice(bs) => Program::Choice(bs.iter().map(|(g, b)| (g.subst(env), b.subst(env))).collect()),
            Program::While(c, b) => Program::While(c.subst(env), Box::new(b.subst(env))),
            Program::Conc(l, r) => Program::Conc(Box::new(l.subst(env)), Box::new(r.subst(env))),
            Program::Star(b, n) => Program::Star(Box::new(b.subst(env)), *n),
            Program::Search(b, n) => Program::Search(Box::new(b.subst(env)), *n),
            Program::Pick(v, s, b) => Program::Pick(v.clone(), s.clone(), Box::new(b.subst(&shadow(v)))),
            Program::ProcCall(n, args) => Program::ProcCall(n.clone(), args.iter().map(|t| t.subst(env)).collect()),
            Program::Interrupts(is) => Program::Interrupts(
                is.iter()
                    .map(|i| Interrupt { priority: i.priority, trigger: i.trigger.subst(env), body: i.body.subst(env) })
                    .collect(),
            ),
        }
    }

    /// True if a `Conc` node occurs anywhere in the program.
    pub fn has_concurrency(&self) -> bool {
        match self {
            Program::Conc(..) => true,
            Program::Nil | Program::Act(_) | Program::Test(_) | Program::ProcCall(..) => false,
            Program::Seq(l, r) => l.has_concurrency() || r.has_concurrency(),
            Program::Choice(bs) => bs.iter().any(|(_, b)| b.has_concurrency()),
            Program::While(_, b) | Program::Star(b, _) | Program::Search(b, _) | Program::Pick(_, _, b) => {
                b.has_concurrency()
            }
            Program::Interrupts(is) => is.iter().any(|i| i.body.has_concurrency()),
        }
    }

    /// Visits every sub-program, outermost first.
    pub fn walk(&self, f: &mut dyn FnMut(&Program)) {
        f(self);
        match self {
            Program::Seq(l, r) | Program::Conc(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Program::Choice(bs) => bs.iter().for_each(|(_, b)| b.walk(f)),
            Program::While(_, b) | Program::Star(b, _) | Program::Search(b, _) | Program::Pick(_, _, b) => b.walk(f),
            Program::Interrupts(is) => is.iter().for_each(|i| i.body.walk(f)),
            _ => {}
        }
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, ts: &[Term]) -> fmt::Result {
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

fn write_call(f: &mut fmt::Formatter<'_>, name: &str, args: &[Term]) -> fmt::Result {
    write!(f, "{name}")?;
    if !args.is_empty() {
        write!(f, "(")?;
        write_terms(f, args)?;
        write!(f, ")")?;
    }
    Ok(())
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for ActionTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_call(f, &self.name, &self.args)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(n, args) => write_call(f, n, args),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Lt(a, b) => write!(f, "{a} < {b}"),
            Formula::Not(g) => write!(f, "neg({g})"),
            Formula::And(gs) => {
                write!(f, "and(")?;
                write_list(f, gs)?;
                write!(f, ")")
            }
            Formula::Or(gs) => {
                write!(f, "or(")?;
                write_list(f, gs)?;
                write!(f, ")")
            }
            Formula::Exists(v, s, g) => write!(f, "some({v},{s},{g})"),
            Formula::Forall(v, s, g) => write!(f, "all({v},{s},{g})"),
        }
    }
}

fn seq_chain(p: &Program) -> Vec<&Program> {
    let mut out = Vec::new();
    let mut cur = p;
    while let Program::Seq(l, r) = cur {
        out.push(l.as_ref());
        cur = r.as_ref();
    }
    out.push(cur);
    out
}

fn conc_chain(p: &Program) -> Vec<&Program> {
    let mut out = Vec::new();
    let mut cur = p;
    while let Program::Conc(l, r) = cur {
        out.push(l.as_ref());
        cur = r.as_ref();
    }
    out.push(cur);
    out
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Nil => write!(f, "[]"),
            Program::Act(a) => write!(f, "{a}"),
            Program::ProcCall(n, args) => write_call(f, n, args),
            Program::Test(g) => write!(f, "?({g})"),
            Program::Seq(..) => {
                write!(f, "[")?;
                write_list(f, &seq_chain(self))?;
                write!(f, "]")
            }
            Program::Conc(..) => {
                write!(f, "rrobin(")?;
                write_list(f, &conc_chain(self))?;
                write!(f, ")")
            }
            Program::Choice(bs) => {
                write!(f, "ndet(")?;
                for (i, (g, body)) in bs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    if *g == Formula::True {
                        write!(f, "{body}")?;
                    } else if *body == Program::Nil {
                        write!(f, "[?({g})]")?;
                    } else {
                        write!(f, "[?({g}),")?;
                        write_list(f, &seq_chain(body))?;
                        write!(f, "]")?;
                    }
                }
                write!(f, ")")
            }
            Program::While(c, b) => write!(f, "while({c},{b})"),
            Program::Star(b, n) => write!(f, "star({b},{n})"),
            Program::Search(b, n) => write!(f, "searchn({b},{n})"),
            Program::Pick(v, s, b) => write!(f, "pi({v},{s},{b})"),
            Program::Interrupts(is) => {
                let mut sorted: Vec<&Interrupt> = is.iter().collect();
                sorted.sort_by_key(|i| i.priority);
                write!(f, "prioritized_interrupts([")?;
                for (k, i) in sorted.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "interrupt({},{})", i.trigger, i.body)?;
                }
                write!(f, "])")
            }
        }
    }
}
