//! Error type shared by every estimation stage.

use std::path::PathBuf;

use thiserror::Error;

use crate::panel::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("panel validation failed with {} row diagnostic(s)", .0.errors.len())]
    Validation(Box<ValidationReport>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("estimation sample is empty after lag alignment")]
    EmptySample,

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("sieve design collapsed to rank {rank} (need at least {required})")]
    RankCollapse { rank: usize, required: usize },

    #[error("no optimizer start converged")]
    NoConvergence,

    #[error("every converged start sits on the parameter boundary")]
    AllBoundary,

    #[error("persistence {0} is not inside (-1, 1); long-run multipliers undefined")]
    NonStationary(f64),

    #[error("subgroup '{0}' is empty")]
    EmptySubgroup(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{failed} of {total} bootstrap replicates failed (cap is {cap})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        cap: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
