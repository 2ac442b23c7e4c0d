// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use crate::game::GameError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error("duplicate passage id {id:?} (line {line})")]
    DuplicateId { id: String, line: usize },

    #[error("{kind} not found: {id:?}")]
    NotFound { kind: &'static str, id: String },

    #[error("no pages in category {0:?}")]
    EmptyCategory(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("n-gram must contain one or two non-empty tokens")]
    EmptyNgram,

    #[error("dimension mismatch: index has dim {expected}, query has dim {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at least two distinct labels are required, found {0}")]
    SingleLabel(usize),

    #[error("missing predictions for ids: {0:?}")]
    MissingPredictions(Vec<String>),

    #[error("adapter {endpoint} failed after {attempts} attempt(s) in {elapsed_ms} ms: {message}")]
    Adapter {
        endpoint: String,
        attempts: u32,
        elapsed_ms: u128,
        message: String,
    },

    #[error("event log gap: expected seq {expected}, found {found}")]
    LogGap { expected: u64, found: u64 },

    #[error("corrupt event log line {line} (seq {seq}): {message}")]
    LogCorrupt { seq: u64, line: usize, message: String },

    #[error(transparent)]
    Game(#[from] GameError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
