//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A data line did not have 2 or 3 tab-separated fields.
    #[error("{path}: line {line}: expected 2 or 3 tab-separated fields, found {found}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        found: usize,
    },

    /// A label field was not INFORMATIVE or UNINFORMATIVE (case-insensitive).
    #[error("{path}: line {line}: unknown label {value:?}")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        value: String,
    },

    /// Labels were required but a line carried none.
    #[error("{path}: line {line}: missing label")]
    MissingLabel { path: PathBuf, line: usize },

    /// A record violated a corpus invariant (empty id, empty text, duplicate id).
    #[error("{path}: line {line}: {reason}")]
    InvalidRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A per-model probability row failed the sum-to-one invariant.
    #[error("model {model:?}: probability row for id {id:?} sums to {sum}, expected 1")]
    InvalidProbabilityRow { model: String, id: String, sum: f64 },

    /// Per-model prediction files disagree on example ids.
    #[error(
        "prediction files are misaligned at position {position}: \
         id {expected:?} in {expected_model:?} vs id {found:?} in {found_model:?}"
    )]
    Misaligned {
        position: usize,
        expected: String,
        expected_model: String,
        found: String,
        found_model: String,
    },

    /// The prediction file lacks an id that the gold file contains.
    #[error("prediction file is missing id {id:?} present in the gold file")]
    MissingPrediction { id: String },

    /// The training loss became non-finite.
    #[error("training diverged at step {step}: loss is not finite")]
    Diverged { step: usize },

    /// A grid-search run failed; carries the offending learning rate.
    #[error("lr={lr}: {source}")]
    LearningRateRun {
        lr: f64,
        #[source]
        source: Box<Error>,
    },

    /// The file is not a checkpoint this build can read.
    #[error("{path}: not a valid checkpoint (expected format_version {expected}): {detail}")]
    CheckpointFormat {
        path: PathBuf,
        expected: u32,
        detail: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
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
