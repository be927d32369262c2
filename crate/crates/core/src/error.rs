use std::io;

use thiserror::Error;

use crate::ltm::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty dataset")]
    EmptyData,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid table for `{variable}`: {reason}")]
    InvalidTable { variable: String, reason: String },

    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("impossible evidence: observed configuration has probability zero")]
    ImpossibleEvidence,

    #[error("degenerate moments matrix (condition estimate {condition:.3e})")]
    Degenerate { condition: f64 },

    #[error("{what} too large: {size} exceeds limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },

    #[error("variable mismatch: {0}")]
    VariableMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
