use std::path::PathBuf;

use thiserror::Error;

use crate::summarizer::IterationStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: weight {weight} outside [0, 1]")]
    WeightRange {
        path: PathBuf,
        line: usize,
        weight: f64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("classes of size {class_size} are too small for certificates at eps={epsilon}; use larger classes or a larger eps")]
    DegenerateScale { class_size: usize, epsilon: f64 },

    #[error("split pool too small: need {needed} vertices, {available} available")]
    DegenerateSplit { needed: usize, available: usize },

    #[error("summarization collected no partition after {} iteration(s)", trace.len())]
    SummaryFailed { trace: Vec<IterationStats> },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: msg.into(),
        }
    }

    /// I/O failures map to exit code 2, everything else to 1.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
