use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid action for UE {ue}: priority {priority} outside 1..={max}")]
    InvalidAction { ue: usize, priority: u32, max: u32 },

    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },

    #[error("empty allocation request")]
    EmptyRequest,

    #[error("allocation request has {priorities} priorities but {demands} demands")]
    RequestShape { priorities: usize, demands: usize },

    #[error("priorities must sum to a positive value")]
    ZeroPrioritySum,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("config line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {source}")]
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
}
