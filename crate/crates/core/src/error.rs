use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed vector file at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("bad magic: not a GANN index file")]
    BadMagic,

    #[error("unsupported index version {0}")]
    UnsupportedVersion(u32),

    #[error("index kind byte {0} out of range")]
    BadKind(u8),

    #[error("index file truncated at byte offset {0}")]
    Truncated(u64),

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error("graph invariant violated: {0}")]
    Graph(String),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
