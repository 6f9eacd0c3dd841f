use std::path::PathBuf;

use thiserror::Error;

/// Every fallible operation in the crate reports through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("kind mismatch: expected {expected}, found {found}")]
    Kind { expected: String, found: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular evaluation at {0}")]
    Singularity(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value:e}, error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
