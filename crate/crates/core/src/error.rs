use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix function singular: eigenvalue {0:e} is not positive")]
    Singularity(f64),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("point lies on (or too close to) the cut locus: {0}")]
    CutLocus(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("graph is disconnected: no path between nodes {0} and {1}")]
    Disconnected(usize, usize),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by numerics rather than by the data itself.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::Singularity(_)
                | Error::NumericalDomain(_)
                | Error::CutLocus(_)
                | Error::DegenerateConfiguration(_)
                | Error::Internal(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
