//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the solvers, the density reconstruction, and the
/// simulator. Input validation failures carry enough context to be
/// reported directly to a user.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid offspring distribution: {0}")]
    InvalidPgf(String),

    #[error("mean offspring <= 1")]
    NotSupercritical,

    #[error("alpha is +infinity; density vanishes faster than any power")]
    AlphaInfinite,

    #[error("empty polynomial")]
    EmptyPolynomial,

    #[error("singular rational composition")]
    SingularRationalComposition,

    #[error("degenerate recursion")]
    DegenerateRecursion,

    #[error("series has non-finite coefficients")]
    NonFiniteSeries,

    #[error("invalid moment sequence")]
    InvalidMomentSequence,

    #[error("rhs overflow; reduce N or rescale")]
    RhsOverflow,

    #[error("moment convolution overflow; reduce N or k")]
    MomentOverflow,

    #[error("rank-deficient least squares at column {column}")]
    RankDeficient { column: usize },

    #[error("zero diagonal in triangular solve at row {row}")]
    ZeroDiagonal { row: usize },

    #[error("population cap exceeded; increase cap or reduce T")]
    PopulationCapExceeded,

    #[error("tail fit underdetermined: {0}")]
    TailFitUnderdetermined(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
