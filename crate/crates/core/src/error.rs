use std::fmt;

use thiserror::Error;

/// A positioned syntax or resolution error.
/// Errors that concern the whole input have line 0 and print without a position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.render())]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        SyntaxError { line, col, message: message.into() }
    }

    fn render(&self) -> String {
        if self.line == 0 {
            self.message.clone()
        } else {
            format!("{}:{}: {}", self.line, self.col, self.message)
        }
    }
}

/// All errors found while parsing one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<SyntaxError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

impl From<SyntaxError> for ParseErrors {
    fn from(e: SyntaxError) -> Self {
        ParseErrors(vec![e])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown fluent or predicate `{0}`")]
    UnknownFluent(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("formula is not closed: free variable in `{0}`")]
    NotGround(String),
    #[error("`<` needs integer operands, got `{0}` and `{1}`")]
    BadComparison(String, String),
    #[error("malformed worklist `{0}`")]
    BadWorklist(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("definition of `{0}` nests too deeply (recursive define?)")]
    DefineDepth(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("procedure inlining exceeded depth {0}")]
    InlineDepth(usize),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{0}` is a service report or exogenous event and cannot be executed by the process")]
    NotExecutable(String),
    #[error("unresolved procedure `{0}`/{1}")]
    UnknownProc(String, usize),
    #[error("unbound variable in action `{0}`")]
    UnboundAction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DumpError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
}
