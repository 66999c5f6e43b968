//! Built-in task-lifecycle procedures.
//!
//! `manageTasks(L)` picks one available service capable of the whole
//! worklist `L` and runs `manageExecution(L, S)` for it, which drives each
//! item in turn through assign, start, ackTaskCompletion and release.

use crate::lang::ast::{Formula, Program};
use crate::sitcalc::{ACK, ASSIGN, RELEASE, SERVICE_SORT, START};
use crate::term::{Term, NONE};

pub const MANAGE_TASKS: &str = "manageTasks";
pub const MANAGE_EXECUTION: &str = "manageExecution";

/// Variable bound by the service pick in `manageTasks`. Not writable in surface syntax.
const SRV: &str = "_srv";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorkItem {
    pub task: String,
    pub id: String,
    pub input: Term,
}

impl WorkItem {
    pub fn new(task: impl Into<String>, id: impl Into<String>, input: Term) -> Self {
        WorkItem { task: task.into(), id: id.into(), input }
    }

    pub fn as_term(&self) -> Term {
        Term::App("workitem".into(), vec![Term::sym(self.task.clone()), Term::sym(self.id.clone()), self.input.clone()])
    }

    pub fn from_term(t: &Term) -> Option<WorkItem> {
        match t {
            Term::App(n, args) if n == "workitem" && args.len() == 3 => {
                Some(WorkItem::new(args[0].as_sym()?, args[1].as_sym()?, args[2].clone()))
            }
            _ => None,
        }
    }

    pub fn has_input(&self) -> bool {
        self.input != Term::sym(NONE)
    }
}

/// Parses a worklist term `[workitem(T,Id,I), ...]`.
pub fn worklist(t: &Term) -> Option<Vec<WorkItem>> {
    match t {
        Term::List(items) => items.iter().map(WorkItem::from_term).collect(),
        _ => None,
    }
}

pub fn worklist_term(items: &[WorkItem]) -> Term {
    Term::List(items.iter().map(WorkItem::as_term).collect())
}

/// The four PMS actions for each item, one item after the other. `Nil` for an empty list.
pub fn manage_execution(items: &[WorkItem], service: &Term) -> Program {
    Program::seq_all(items.iter().flat_map(|item| {
        let t = Term::sym(item.task.clone());
        let id = Term::sym(item.id.clone());
        [
            Program::act(ASSIGN, vec![service.clone(), t.clone(), id.clone()]),
            Program::act(START, vec![service.clone(), t.clone(), id.clone(), item.input.clone()]),
            Program::act(ACK, vec![service.clone(), t.clone(), id.clone()]),
            Program::act(RELEASE, vec![service.clone(), t, id]),
        ]
    }))
}

/// `available(s) & capable(s, L)`.
pub fn assignable(service: &Term, worklist: Term) -> Formula {
    Formula::And(vec![
        Formula::atom("available", vec![service.clone()]),
        Formula::atom("capable", vec![service.clone(), worklist]),
    ])
}

/// `pi(s, service, [?(available(s) & capable(s, L)), manageExecution(L, s)])`, with `var` as `s`.
pub fn pick_service(var: &str, worklist: Term) -> Program {
    let s = Term::var(var);
    Program::Pick(
        var.into(),
        SERVICE_SORT.into(),
        Box::new(Program::seq(
            Program::Test(assignable(&s, worklist.clone())),
            Program::ProcCall(MANAGE_EXECUTION.into(), vec![worklist, s]),
        )),
    )
}

/// One service for the whole worklist. An empty worklist is `Nil`.
pub fn manage_tasks(items: &[WorkItem]) -> Program {
    if items.is_empty() {
        return Program::Nil;
    }
    pick_service(SRV, worklist_term(items))
}
