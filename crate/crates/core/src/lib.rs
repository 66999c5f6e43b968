//! Adaptive process management over a situation-calculus action theory.
//!
//! Processes are written in a small IndiGolog-style language and executed
//! online against an environment of services. A monitor compares each
//! exogenous change with the expected state and, when one matters, plans a
//! recovery prefix by bounded offline lookahead.

pub mod engine;
pub mod error;
pub mod interp;
pub mod lang;
pub mod lifecycle;
pub mod monitor;
pub mod sim;
pub mod sitcalc;
pub mod term;
pub mod trace;

pub use engine::{run, EngineConfig, Outcome, RunReport};
pub use lang::scenario::{parse_scenario, Scenario};
pub use sitcalc::{Domain, WorldState};
pub use term::{ActionInstance, Atom, Term};
