use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid detection at frame {frame}: {reason}")]
    InvalidDetection { frame: i64, reason: String },

    #[error("frame {got} does not follow the last frame {expected_after}")]
    FrameGap { expected_after: i64, got: i64 },

    #[error("non-finite {what} cost")]
    NonFiniteCost { what: &'static str },

    #[error("invalid cost model: {0}")]
    CostModel(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance too large for exhaustive search: {detections} detections (limit {limit})")]
    TooLarge { detections: usize, limit: usize },

    #[error("graph operation rejected: {0}")]
    Rejected(String),

    /// An internal invariant of the solver or graph broke.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}
