use std::path::PathBuf;

use thiserror::Error;

use crate::pool::CandidateId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("candidate `{0}` is not in the unlabeled pool")]
    PartitionViolation(CandidateId),

    #[error("class index {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("invalid prediction matrix: {0}")]
    InvalidPrediction(String),

    #[error("pattern diagnostic needs exactly 2 classes, got {0}")]
    UnsupportedDiagnostic(usize),

    #[error("sampling window {window} does not fit a list of {len} scores")]
    Window { window: usize, len: usize },

    #[error("shape mismatch: expected {expected} features, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("candidate `{0}` has already been annotated")]
    DoubleAnnotation(CandidateId),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Whether the error stems from user configuration rather than a failure at runtime.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json(_))
    }
}
