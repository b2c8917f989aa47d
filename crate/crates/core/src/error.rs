use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the matching pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("pnm decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },

    #[error("homography fit failed: {0}")]
    Fit(String),

    /// Fewer than four preliminary matches were supplied to RANSAC.
    #[error("insufficient matches: {found} (need at least 4)")]
    InsufficientMatches { found: usize },

    /// RANSAC ran but no model gathered four inliers.
    #[error("no consensus set of at least 4 inliers")]
    NoConsensus,

    #[error("similarity score undefined for an empty distance set")]
    UndefinedScore,

    #[error("unknown image id `{0}`")]
    Lookup(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("feature file {path}: line {line}: {message}")]
    FeatureFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
