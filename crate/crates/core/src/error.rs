use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HhnError>;

#[derive(Debug, Error)]
pub enum HhnError {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("softmax row {row} is fully masked")]
    DegenerateRow { row: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Divergence { iteration: usize, loss: f64 },
}

impl HhnError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HhnError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        HhnError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input (as opposed to failures while running).
    pub fn is_validation(&self) -> bool {
        match self {
            HhnError::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            HhnError::NonFinite(_) | HhnError::Divergence { .. } => false,
            _ => true,
        }
    }
}
