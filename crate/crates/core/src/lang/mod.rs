pub mod ast;
pub mod lexer;
pub mod parser;
pub mod scenario;
pub mod validate;

pub use parser::{parse_action, parse_formula, parse_process, parse_term};
