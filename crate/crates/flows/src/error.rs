use thiserror::Error;

/// Crate-wide error type.
///
/// The grouping mirrors how callers react: bad inputs or violated
/// preconditions, hard numerical verification failures, and exceeded
/// enumeration guards are distinct failure classes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension {d} out of range (valid 0..={max})")]
    DimensionOutOfRange { d: usize, max: usize },

    #[error("unknown simplex {0:?}")]
    UnknownSimplex(Vec<usize>),

    #[error("not a bijection of the vertex labels: {0}")]
    InvalidPermutation(String),

    #[error("permutation is not a symmetry of the complex: {0}")]
    NotASymmetry(String),

    #[error("coupling must be componentwise for this operation")]
    ComponentwiseRequired,

    #[error("coupling components must be odd for this operation")]
    OddnessRequired,

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("floating-point rank {float_rank} disagrees with exact integer rank {int_rank}")]
    RankDisagreement { float_rank: usize, int_rank: usize },

    #[error("verification failure: {0}")]
    VerificationFailure(String),

    #[error("enumeration guard exceeded: {size} simplices > limit {limit}")]
    GuardExceeded { size: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
