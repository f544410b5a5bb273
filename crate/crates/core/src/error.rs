use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {msg}")]
    Malformed { file: String, line: u64, msg: String },

    #[error("utterance {utt_id} overlaps the previous utterance on side {side}")]
    Overlap { side: String, utt_id: String },

    #[error("utterance {utt_id} spans [{start}, {end}) s, outside the frame track ({track_end} s)")]
    SpanOutsideTrack {
        utt_id: String,
        start: f64,
        end: f64,
        track_end: f64,
    },

    #[error("unknown dialog act tag {tag:?}")]
    UnknownTag { tag: String },

    #[error("class {0:?} has no datapoints")]
    EmptyClass(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("unsupported {what} version field: found {found}, expected {expected}")]
    UnsupportedVersion {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("class sets differ: {0}")]
    ClassMismatch(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(file: impl ToString, line: u64, msg: impl ToString) -> Self {
        Error::Malformed {
            file: file.to_string(),
            line,
            msg: msg.to_string(),
        }
    }

    pub(crate) fn invalid(msg: impl ToString) -> Self {
        Error::Invalid(msg.to_string())
    }
}
