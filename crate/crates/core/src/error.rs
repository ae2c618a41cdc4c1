use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("group {group} has {n} observations, at least {required} required")]
    InsufficientSamples {
        group: usize,
        n: usize,
        required: usize,
    },

    /// The variance estimate came out nonpositive; the raw value is kept.
    #[error("degenerate variance estimate: sigma_hat^2 = {value:e}")]
    DegenerateVariance { value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config is missing required key '{0}'")]
    MissingKey(&'static str),

    #[error("malformed table: {0}")]
    Table(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("all {reps} replications of cell {cell} failed")]
    CellFailed { cell: String, reps: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
