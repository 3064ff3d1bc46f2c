use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AlvsError>;

#[derive(Debug, Error)]
pub enum AlvsError {
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("malformed graymap: {0}")]
    Pgm(String),

    #[error("frame {requested} out of range (valid: {first}..={last})")]
    FrameOutOfRange {
        requested: u64,
        first: u64,
        last: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AlvsError {
    pub fn param(name: &str, reason: impl Into<String>) -> Self {
        AlvsError::InvalidParam {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
