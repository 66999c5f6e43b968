//! Ground and non-ground terms, fluent atoms and action instances.

use std::collections::BTreeMap;
use std::fmt;

/// A first-order term over the finite domains of a scenario.
///
/// `Var` only appears in program and rule templates; everything the state or
/// the trace stores is ground.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(i64),
    Sym(String),
    App(String, Vec<Term>),
    List(Vec<Term>),
    Var(String),
}

/// The empty input/output payload.
pub const NONE: &str = "none";

pub type Bindings = BTreeMap<String, Term>;

impl Term {
    pub fn sym(s: impl Into<String>) -> Self {
        Term::Sym(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        Term::Var(s.into())
    }

    pub fn none() -> Self {
        Term::Sym(NONE.to_string())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Int(_) | Term::Sym(_) => true,
            Term::Var(_) => false,
            Term::App(_, args) | Term::List(args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Term::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(n) => Some(*n),
            _ => None,
        }
    }

    /// Replaces variables bound in `env` and evaluates the built-in `succ`.
    pub fn subst(&self, env: &Bindings) -> Term {
        match self {
            Term::Var(v) => env.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Int(_) | Term::Sym(_) => self.clone(),
            Term::List(items) => Term::List(items.iter().map(|t| t.subst(env)).collect()),
            Term::App(f, args) => {
                let args: Vec<Term> = args.iter().map(|t| t.subst(env)).collect();
                if f == "succ" && args.len() == 1 {
                    if let Term::Int(n) = args[0] {
                        return Term::Int(n + 1);
                    }
                }
                Term::App(f.clone(), args)
            }
        }
    }

    /// One-way matching of a pattern against a ground term. `_` matches anything.
    pub fn match_ground(&self, ground: &Term, env: &mut Bindings) -> bool {
        match (self, ground) {
            (Term::Var(v), g) if v == "_" => {
                let _ = g;
                true
            }
            (Term::Var(v), g) => match env.get(v) {
                Some(bound) => bound == g,
                None => {
                    env.insert(v.clone(), g.clone());
                    true
                }
            },
            (Term::App(f, xs), Term::App(g, ys)) if f == g && xs.len() == ys.len() => {
                xs.iter().zip(ys).all(|(x, y)| x.match_ground(y, env))
            }
            (Term::List(xs), Term::List(ys)) if xs.len() == ys.len() => {
                xs.iter().zip(ys).all(|(x, y)| x.match_ground(y, env))
            }
            (a, b) => a == b,
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Term::App(_, args) | Term::List(args) => args.iter().for_each(|t| t.vars(out)),
            _ => {}
        }
    }

    /// Grid coordinates of a `loc(x,y)` term.
    pub fn as_loc(&self) -> Option<(i64, i64)> {
        match self {
            Term::App(f, args) if f == "loc" && args.len() == 2 => {
                Some((args[0].as_int()?, args[1].as_int()?))
            }
            _ => None,
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Sym(s) | Term::Var(s) => write!(f, "{s}"),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                write_args(f, args)?;
                write!(f, ")")
            }
            Term::List(items) => {
                write!(f, "[")?;
                write_args(f, items)?;
                write!(f, "]")
            }
        }
    }
}

/// A ground fluent atom such as `free(a1)` or `photos(3)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { name: name.into(), args }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}(", self.name)?;
            write_args(f, &self.args)?;
            write!(f, ")")
        }
    }
}

/// A ground action term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionInstance {
    pub name: String,
    pub args: Vec<Term>,
}

impl ActionInstance {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        ActionInstance { name: name.into(), args }
    }

    pub fn as_term(&self) -> Term {
        if self.args.is_empty() {
            Term::Sym(self.name.clone())
        } else {
            Term::App(self.name.clone(), self.args.clone())
        }
    }

    pub fn from_term(t: &Term) -> Option<Self> {
        match t {
            Term::Sym(s) => Some(ActionInstance::new(s.clone(), vec![])),
            Term::App(f, args) if t.is_ground() => Some(ActionInstance::new(f.clone(), args.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for ActionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Atom::new(self.name.clone(), self.args.clone()))
    }
}
