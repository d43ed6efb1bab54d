use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} requires a square matrix, got {1}x{2}")]
    NotSquare(&'static str, usize, usize),

    #[error("matrix exponential did not converge (scaling depth {0} exceeds 64)")]
    SeriesNonConvergence(u32),

    #[error("matrix is not Schur stable within {0} powers")]
    NotSchur(usize),

    #[error("invariant set approximation failed: no contraction within {0} steps")]
    NoContraction(usize),

    #[error("{0}")]
    InvalidInput(String),

    #[error("linear program failed at horizon {horizon}: {source}")]
    SolverAtHorizon {
        horizon: usize,
        #[source]
        source: LpError,
    },

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("initial problem infeasible at x0 = {0:?} (no horizon up to {1} admits an exact-terminal solution)")]
    InfeasibleStart(Vec<f64>, usize),

    #[error("invariant breach at step {step}: {message}")]
    InvariantBreach { step: usize, message: String },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("sampling failed: acceptance rate {accepted}/{proposed} below 0.1%")]
    SamplingFailed { accepted: usize, proposed: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
