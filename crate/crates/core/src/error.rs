use std::path::PathBuf;

/// Errors produced anywhere in the reservoir pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: byte offset {offset}: {reason}", path.display())]
    Ingest {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("power-law diagnostic unavailable: {usable} usable bins (need at least 3)")]
    InsufficientBins { usable: usize },

    #[error("cache at {} does not match the requested configuration: {reason}", path.display())]
    CacheMismatch { path: PathBuf, reason: String },

    #[error("feature cache {} not found; run `qrc features` with the same configuration first", path.display())]
    MissingCache { path: PathBuf },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss} (learning rate {learning_rate}); lower the learning rate")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
        learning_rate: f64,
    },

    #[error("usage: {0}")]
    Usage(String),
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
