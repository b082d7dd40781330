use std::path::PathBuf;

use crate::solver::SolveError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric: entry ({row}, {col}) has no mirror")]
    Asymmetric { row: usize, col: usize },

    #[error("transform `{op}` requires an optimal solution")]
    SolutionRequired { op: String },

    #[error("transform `{op}` requires a positive definite quadratic term")]
    NotPositiveDefinite { op: String },

    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document: {0}")]
    Format(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
