use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown label {0:?} (expected positive, negative or neutral)")]
    UnknownLabel(String),

    #[error("dataset {0:?} contains no samples")]
    NoSamples(String),

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("missing citation sentence index for ids: {}", .0.join(", "))]
    MissingSentenceIndex(Vec<String>),

    #[error("sample {id:?}: sentence ordinal {ordinal} out of range ({count} sentences)")]
    SentenceOrdinal {
        id: String,
        ordinal: usize,
        count: usize,
    },

    #[error("sample {id:?}: annotation has {annotation_tokens} word tokens, text has {text_tokens}")]
    Alignment {
        id: String,
        annotation_tokens: usize,
        text_tokens: usize,
    },

    #[error("empty POS tag for word {0:?}")]
    EmptyTag(String),

    #[error("shape mismatch for {tensor}: expected {expected}, got {actual}")]
    Shape {
        tensor: String,
        expected: String,
        actual: String,
    },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than a failure mid-run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnknownLabel(_)
                | Error::NoSamples(_)
                | Error::DuplicateId(_)
                | Error::MissingSentenceIndex(_)
                | Error::SentenceOrdinal { .. }
                | Error::Alignment { .. }
                | Error::EmptyTag(_)
                | Error::Config(_)
                | Error::Invalid(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
