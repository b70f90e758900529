use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A context lies outside its box, or an argument outside a function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A non-finite or otherwise unusable value.
    #[error("value error: {0}")]
    Value(String),

    /// A malformed argument (empty input, wrong dimension, bad size).
    #[error("argument error: {0}")]
    Argument(String),

    /// No observation exists for the decision at the query.
    #[error("no data for decision {decision}")]
    NoData { decision: usize },

    /// The neighborhood holds a single observation, so the sample variance is undefined.
    #[error("standard deviation unavailable for decision {decision}: neighborhood holds {psi} observation(s)")]
    StdUnavailable { decision: usize, psi: usize },

    /// The dataset lacks the initial observations an estimator or policy needs.
    #[error("uninitialized: {0}")]
    Uninitialized(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
