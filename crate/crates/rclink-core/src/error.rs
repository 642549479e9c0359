//! Error types shared across the crate.
//!
//! Errors are grouped into four categories that map onto the CLI exit codes:
//! configuration/parameter problems (exit 2), data-format problems while
//! reading channel files (exit 3), and numerical failures (exit 4).

use std::path::PathBuf;
use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Data-format violations raised while ingesting a channel CSV file.
///
/// Each violation the format specification names is a distinct variant so
/// callers (and tests) can tell them apart. All variants name the first
/// offending row where one exists.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad header at line 1: expected `freq_hz,sample,rx,tx,re,im`, got `{0}`")]
    BadHeader(String),
    #[error("line {line}: expected 6 comma-separated fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: cannot parse field `{field}` from `{value}`")]
    Parse {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: non-finite value in field `{field}`")]
    NonFinite { line: usize, field: &'static str },
    #[error("line {line}: duplicate row for (freq_hz={freq_hz}, sample={sample}, rx={rx}, tx={tx})")]
    DuplicateRow {
        line: usize,
        freq_hz: f64,
        sample: usize,
        rx: usize,
        tx: usize,
    },
    #[error("missing row for (freq_hz={freq_hz}, sample={sample}, rx={rx}, tx={tx})")]
    MissingTuple {
        freq_hz: f64,
        sample: usize,
        rx: usize,
        tx: usize,
    },
    #[error("non-uniform frequency grid: gap {gap_hz} Hz between {prev_hz} and {next_hz} Hz differs from first gap {step_hz} Hz")]
    NonUniformGrid {
        prev_hz: f64,
        next_hz: f64,
        gap_hz: f64,
        step_hz: f64,
    },
    #[error("cannot infer a frequency grid from a single distinct frequency")]
    SingleFrequency,
    #[error("file contains no data rows")]
    EmptyFile,
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented constraints.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Array/matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Configuration file or CLI configuration problem.
    #[error("config error: {0}")]
    Config(String),

    /// Channel-file format violation.
    #[error("data format error: {0}")]
    Format(#[from] FormatError),

    /// I/O failure with the path that caused it.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Reference ensemble too weak to normalize against.
    #[error("degenerate reference: average power transfer {0:.3e} is below 1e-30")]
    DegenerateReference(f64),

    /// Channel matrix too ill-conditioned for zero-forcing.
    #[error("singular channel matrix: condition number {cond:.3e} exceeds {limit:.1e}")]
    SingularChannel { cond: f64, limit: f64 },

    /// Any other numerical failure.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data format, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::DimensionMismatch(_) | Error::Config(_) => 2,
            Error::Format(_) | Error::Io { .. } => 3,
            Error::DegenerateReference(_) | Error::SingularChannel { .. } | Error::Numerical(_) => 4,
        }
    }
}
