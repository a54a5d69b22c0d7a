use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: label out of range: {label}")]
    LabelOutOfRange { line: usize, label: String },

    #[error("duplicate label for item {item:?} by worker {worker:?} (lines {first_line} and {second_line})")]
    DuplicateLabel {
        item: String,
        worker: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("duplicate ground truth for item {item:?} (lines {first_line} and {second_line})")]
    DuplicateTruth {
        item: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("items without any label: {0:?}")]
    UnlabeledItems(Vec<usize>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("confusion row at fixed level {level} cannot be sampled")]
    FixedLevel { level: usize },

    #[error("zero probability assigned to an observed label (worker {worker}, level {level}, true {truth}, observed {observed})")]
    ZeroProbability {
        worker: usize,
        level: usize,
        truth: usize,
        observed: usize,
    },

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
