use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed duration {0:?}: expected N, Nus, Nms or Ns")]
    Duration(String),

    #[error("layout line {line}: {reason}")]
    Layout { line: usize, reason: String },

    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),

    #[error("{path}: malformed capture at byte offset {offset}: {reason}")]
    Capture {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("{path}: unsupported link type {linktype} (only raw IPv4 captures are accepted)")]
    UnsupportedLinkType { path: PathBuf, linktype: u32 },

    #[error("digest collision in sender capture between packet #{first} and packet #{second}")]
    DigestCollision { first: u64, second: u64 },

    #[error("flow {flow}: {reason}")]
    Flow { flow: usize, reason: String },

    #[error("plot: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
