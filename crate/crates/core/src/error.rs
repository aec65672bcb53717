use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chimera shape: {0}")]
    Shape(String),

    #[error("site {site} is out of range (total sites {total})")]
    SiteOutOfRange { site: usize, total: usize },

    #[error("site {0} is broken (inactive)")]
    BrokenSite(usize),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("anneal fraction {0} outside [0, 1]")]
    FractionOutOfRange(f64),

    #[error("schedule has no A/B crossing")]
    NoCrossing,

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("effective field at site {0} is zero; direction undefined")]
    ZeroField(usize),

    #[error("greedy descent did not converge after {0} passes")]
    NoConvergence(usize),

    #[error("instance too large for this solver: {0}")]
    TooLarge(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
