use std::path::PathBuf;

use thiserror::Error;

use crate::linalg::LinalgError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
#[non_exhaustive]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("sample {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("need at least one positive and one negative sample (got {positives} positive, {negatives} negative)")]
    MissingClass { positives: usize, negatives: usize },

    #[error("contrast parameter {0} outside [0, 1]")]
    ContrastOutOfRange(f64),

    #[error("output dimension k={k} must satisfy 1 <= k < d={d}")]
    InvalidRank { k: usize, d: usize },

    #[error(
        "B_beta is singular at beta={beta} (background covariance is rank deficient, \
         Cholesky pivot {pivot}); use beta < 1 or set an explicit ridge"
    )]
    SingularBackground { beta: f64, pivot: usize },

    #[error("step size eta={eta} must lie in the open interval (0, tau={tau})")]
    InvalidStepSize { eta: f64, tau: f64 },

    #[error("lateral weight matrix M lost positive definiteness (min eigenvalue {min_eig:e}); use a smaller eta")]
    LostDefiniteness { min_eig: f64 },

    #[error("non-finite values produced; use a smaller eta")]
    Diverged,

    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate state: feedforward map has rank < k (singular value ratio {ratio:e})")]
    DegenerateState { ratio: f64 },

    #[error("direction has no background variance (v'C-v = {0:e}); signal-to-noise ratio undefined")]
    NoiseFreeDirection(f64),

    #[error("vector is not unit length (norm {0})")]
    NotUnit(f64),

    #[error("{0}")]
    InvalidInput(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the filesystem or of file formats, as opposed to
    /// numerical or domain errors.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. } | Error::Json(_))
    }
}
