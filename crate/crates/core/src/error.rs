use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;
use crate::prefeval::DatasetError;
use crate::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty constraint set: delta ({delta}) must exceed log_z ({log_z})")]
    EmptyConstraint { delta: f64, log_z: f64 },

    /// The oracle ran out of iterations. `last` is its final iterate.
    #[error("no convergence after {iters} iterations (last improvement {last_improvement:e})")]
    NoConvergence {
        iters: usize,
        last_improvement: f64,
        last: Vec<f64>,
    },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("decode step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("generation aborted after {} tokens: {source}", partial.len())]
    Generation {
        partial: Vec<TokenId>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Innermost error, looking through step and generation wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } | Error::Generation { source, .. } => source.root(),
            other => other,
        }
    }

    /// True when the failure originates in a backend (transport, protocol,
    /// out-of-range ids).
    pub fn is_backend(&self) -> bool {
        matches!(self.root(), Error::Backend(_))
    }
}
