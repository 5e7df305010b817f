//! Crate-wide error type.

use std::path::PathBuf;

/// All failure modes surfaced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A required input file is absent.
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    /// A structured text file failed to parse. `line` is 1-based; 0 means
    /// the failure is not tied to a single line.
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Dataset records referenced perspective ids that are not in the pool.
    #[error("perspective ids referenced but absent from pool: {ids:?}")]
    MissingPerspectives { ids: Vec<i64> },

    /// Caller-supplied value violates an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An internal contract was violated (e.g. calling a BASE-only path on a
    /// CONS model).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A computation degenerated numerically (zero-norm vector, NaN loss).
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// Two prediction sets (or predictions vs. gold pairs) do not cover the
    /// same pair ids.
    #[error("pair id sets are not aligned; missing: {missing:?}, extra: {extra:?}")]
    Alignment {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    /// Training could not produce any usable model.
    #[error("training failed: {0}")]
    Training(String),

    /// A checkpoint directory is missing pieces or inconsistent.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Configuration validation failures, all of them at once.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    ConfigValidation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
