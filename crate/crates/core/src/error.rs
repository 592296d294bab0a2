use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain of `{metric}`")]
    DomainMismatch { metric: String, point: Vec<f64> },

    #[error("non-finite coordinate in point {0:?}")]
    NonFinite(Vec<f64>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("control function evaluated at negative argument {0}")]
    NegativeInput(f64),

    #[error("density is negative ({value}) at t = {at}")]
    NegativeDensity { at: f64, value: f64 },

    #[error("point set is empty")]
    EmptySet,

    #[error("{0} produced a negative value; condition violated")]
    Negativity(&'static str),

    #[error("raster bounds are degenerate: {0}")]
    DegenerateBounds(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("scenario does not match the `{command}` schema: {message}")]
    Schema { command: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
