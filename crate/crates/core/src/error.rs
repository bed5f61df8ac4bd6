use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration (unknown ids, bad ranges, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("function evaluation budget exhausted: {used} used, batch of {requested} exceeds budget {budget}")]
    BudgetExhausted {
        used: u64,
        requested: u64,
        budget: u64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parameter vector length mismatch: expected {expected}, got {actual}")]
    ParamLength { expected: usize, actual: usize },

    #[error("integrity error in {path}: {reason}")]
    Integrity { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("task `{task}`: {source}")]
    Task {
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn in_task(self, task: &str) -> Self {
        Error::Task {
            task: task.to_string(),
            source: Box::new(self),
        }
    }
}
