use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("recording too short: {duration} minutes available, window needs {window}")]
    RecordingTooShort { duration: usize, window: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown subject id {0:?}")]
    UnknownSubject(String),

    #[error("classifier requires ≥1 labeled subject")]
    NoLabeledSubjects,

    #[error("no segments")]
    NoSegments,

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("shape mismatch: expected width {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite gradient in tensor {0}")]
    NonFiniteGradient(String),

    #[error("backward called without a recorded forward pass")]
    NoForwardPass,


    #[error("empty batch")]
    EmptyBatch,

    #[error("cannot place {events} events with separation {separation} min in {wear} min")]
    EventPlacement { events: usize, separation: usize, wear: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

/// Non-fatal conditions surfaced to callers and echoed into reports.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Subject whose pooled standard deviation vanished; its values were zeroed.
    DegenerateSubject { subject_id: String },
    /// Labeled training data contains a single class.
    SingleClassLabels { class: bool },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::DegenerateSubject { subject_id } => {
                write!(f, "subject {subject_id:?} has a constant signal; values set to 0")
            }
            Warning::SingleClassLabels { class } => {
                write!(f, "labeled data contains only class {}", u8::from(*class))
            }
        }
    }
}
