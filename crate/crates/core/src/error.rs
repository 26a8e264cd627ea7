//! Shared error type for the whole crate.

use thiserror::Error;

/// Errors produced by interval arithmetic, evaluation, parsing, the
/// attention kernels, and the file loaders.
#[derive(Debug, Error)]
pub enum Error {
    /// A raw input range failed validation (reversed, negative, or non-finite).
    #[error("invalid time range at index {index}: start={start_s}, end={end_s}")]
    InvalidRange {
        index: usize,
        start_s: f64,
        end_s: f64,
    },

    /// A single time range failed validation.
    #[error("invalid time range: start={start_s}, end={end_s}")]
    InvalidTimeRange { start_s: f64, end_s: f64 },

    /// A caller violated an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Structurally invalid records: duplicate ids, missing fields,
    /// out-of-bounds ground truth, unknown enum values.
    #[error("schema error: {0}")]
    Schema(String),

    /// A malformed line in a JSONL file.
    #[error("{path}:{line}: {message}")]
    JsonLine {
        path: String,
        line: usize,
        message: String,
    },

    /// Text from which no time range or frame range could be extracted.
    #[error("unparseable model output: {text:?}")]
    Parse { text: String },

    /// Frame indices beyond the sampled frame count.
    #[error("frame indices out of range (n_frames={n_frames}): {indices:?}")]
    FrameIndexOutOfRange { indices: Vec<u64>, n_frames: u64 },

    /// An operation that requires at least one sample received none.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// Attention over an empty key set.
    #[error("attention over an empty key set")]
    EmptyAttention,

    /// Every attended modality is empty.
    #[error("degenerate attention: {0}")]
    DegenerateAttention(String),

    /// A kernel contract violation (wrong token kind, dimension mismatch).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Non-finite values where finite arithmetic is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
