use std::path::PathBuf;

/// Crate-wide error type. Dimension errors always name both shapes so a
/// mismatch deep inside a pipeline can be traced without a debugger.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, left operand is {left_rows}x{left_cols}, right operand is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("SVD failed to converge after {iterations} iterations")]
    SvdNonConvergence { iterations: usize },

    #[error("sketch density p must lie in (0, 1], got {0}")]
    InvalidDensity(f64),

    #[error("second sketch product has numerical rank {observed}, need {required}; retry with a new seed or a larger k2")]
    RankDeficientSketch { observed: usize, required: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{path}: {message}")]
    MatrixFile { path: PathBuf, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }
}
