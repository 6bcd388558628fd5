use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty evaluation set")]
    EmptyEvaluationSet,

    #[error("no matched datapoints")]
    NoMatchedDatapoints,

    #[error("invalid prediction set: {0}")]
    InvalidSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("outcomes do not belong to one source/target pair: {0}")]
    MixedOutcomes(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// I/O failures map to CLI exit code 2; everything else is a validation
    /// failure (exit code 1).
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
