//! Static checks beyond name resolution, reported by `pms check`.

use std::fmt;

use crate::lang::ast::Program;
use crate::lang::scenario::Scenario;
use crate::lifecycle::{MANAGE_EXECUTION, MANAGE_TASKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// A sort with no members; every `pi` over it blocks.
    EmptySort(String),
    UnresolvedProc(String, usize),
    /// No declared service provides every capability the task requires.
    NoCapableService(String),
}

impl Diagnostic {
    pub fn severity(&self) -> Severity {
        match self {
            Diagnostic::UnresolvedProc(..) => Severity::Error,
            Diagnostic::EmptySort(_) | Diagnostic::NoCapableService(_) => Severity::Warning,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity() {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self {
            Diagnostic::EmptySort(s) => write!(f, "{sev}: sort `{s}` is empty"),
            Diagnostic::UnresolvedProc(p, n) => write!(f, "{sev}: unresolved procedure `{p}`/{n}"),
            Diagnostic::NoCapableService(t) => write!(f, "{sev}: no service is capable of task `{t}`"),
        }
    }
}

pub fn validate(scn: &Scenario) -> Vec<Diagnostic> {
    let d = &scn.domain;
    let mut out = Vec::new();
    for (name, members) in &d.sorts {
        if members.is_empty() {
            out.push(Diagnostic::EmptySort(name.clone()));
        }
    }
    for t in &d.tasks {
        let capable = d.services().iter().any(|s| {
            let s = s.as_sym().unwrap_or_default();
            t.requires.iter().all(|c| d.provides(s, c))
        });
        if !capable {
            out.push(Diagnostic::NoCapableService(t.name.clone()));
        }
    }
    let mut check = |p: &Program| {
        if let Program::ProcCall(name, args) = p {
            let ok = match name.as_str() {
                MANAGE_TASKS => args.len() == 1,
                MANAGE_EXECUTION => args.len() == 2,
                n => d.procs.get(n).is_some_and(|def| def.params.len() == args.len()),
            };
            if !ok {
                out.push(Diagnostic::UnresolvedProc(name.clone(), args.len()));
            }
        }
    };
    scn.process.walk(&mut check);
    for def in d.procs.values() {
        def.body.walk(&mut check);
    }
    out
}
