use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or non-finite input.
    #[error("invalid input: {0}")]
    Input(String),

    /// Shapes or ambient dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A square system is singular relative to the invertibility threshold.
    #[error("matrix is singular to tolerance (sigma_min = {sigma_min:e}, threshold = {threshold:e})")]
    SingularMatrix { sigma_min: f64, threshold: f64 },

    /// Two subspaces were expected to be complementary but are not.
    #[error("subspaces are not complementary: {reason}")]
    Complement {
        reason: String,
        /// Unit vector lying in both subspaces, when they intersect.
        witness: Option<Vec<f64>>,
        /// `ambient_dim - (dim U + dim V)` when the dimensions do not add up.
        deficit: Option<i64>,
    },

    /// An operation was called outside its standing hypothesis.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// CSV or JSON input could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A bounded sampling loop gave up.
    #[error("sampling failed after {attempts} attempts: {reason}")]
    Sampling { attempts: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
