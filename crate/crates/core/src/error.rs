use thiserror::Error;

/// Errors produced by kernel construction, the solvers, and file handling.
#[derive(Debug, Error)]
pub enum MvklError {
    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),

    #[error("invalid regularization: shift must be positive, got {0}")]
    InvalidRegularization(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error for key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, MvklError>;

impl MvklError {
    pub(crate) fn dims(
        context: &'static str,
        expected: impl std::fmt::Display,
        got: impl std::fmt::Display,
    ) -> Self {
        MvklError::DimensionMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Wraps a numerical failure with the outer iteration it happened in.
    pub fn with_context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            MvklError::NumericalFailure(msg) => MvklError::NumericalFailure(format!("{ctx}: {msg}")),
            other => other,
        }
    }
}
