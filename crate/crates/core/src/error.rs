use thiserror::Error;

/// Errors produced by the library and mapped onto CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed field file at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("solver failure after {iterations} iterations (residual {residual:.3e}): {message}")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        message: String,
    },

    #[error("structure violation: {0}")]
    StructureViolation(String),

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Parse { .. } | Error::Io(_) | Error::Csv(_) => 1,
            Error::SolverFailure { .. } | Error::StructureViolation(_) => 2,
            Error::Assertion(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
