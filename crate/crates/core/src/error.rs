use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single validation failure, named by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid quantity '{text}': {reason}")]
    Quantity { text: String, reason: String },

    #[error("unknown unit suffix '{suffix}'")]
    UnknownUnit { suffix: String },

    #[error("invalid assembly: {}", join_errors(.0))]
    Invalid(Vec<FieldError>),

    #[error("invalid argument {what}: {reason}")]
    InvalidArg { what: &'static str, reason: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{what} index {index} out of range 1..={max}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("calibration did not converge: {0}")]
    Calibration(String),

    #[error("bad command: {0}")]
    Command(String),
}

impl Error {
    pub(crate) fn arg(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArg {
            what,
            reason: reason.into(),
        }
    }
}

fn join_errors(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
