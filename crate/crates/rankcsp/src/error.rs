use thiserror::Error;

/// Errors shared by every layer of the crate. Variants carry enough context to
/// reproduce the failing call.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("arity {k} unsupported, expected 2 <= k <= {max}", max = crate::MAX_ARITY)]
    InvalidArity { k: usize },

    #[error("domain size {n} too small for arity {k}")]
    DomainTooSmall { n: usize, k: usize },

    #[error("vertex {v} out of range for domain of size {n}")]
    VertexOutOfRange { v: usize, n: usize },

    #[error("vertex {v} appears more than once")]
    DuplicateVertex { v: usize },

    #[error("sequence is not a ranking of the expected domain")]
    NotARanking,

    #[error("position {p} already occupied by another vertex")]
    PositionCollision { p: String },

    #[error("domain mismatch: {detail}")]
    DomainMismatch { detail: String },

    #[error("epsilon {eps} invalid: {reason}")]
    InvalidEpsilon { eps: String, reason: String },

    #[error("noise rate {rho} outside [0, 1]")]
    InvalidNoise { rho: String },

    #[error("family {family} incompatible with arity {k}")]
    IncompatibleFamily { family: String, k: usize },

    #[error("constraint payload mentions vertex {v} outside its own subset")]
    PayloadOutOfSubset { v: usize },

    #[error("invalid constraint payload: {detail}")]
    InvalidPayload { detail: String },

    #[error("expected {expected} constraints, found {actual}")]
    CountMismatch { expected: u64, actual: u64 },

    #[error("subset {subset:?} listed more than once")]
    DuplicateSubset { subset: Vec<usize> },

    #[error("instance parse failed: {message}")]
    Parse { message: String },

    #[error("arc weight for ({u}, {v}) is negative")]
    NegativeWeight { u: usize, v: usize },

    #[error("self-arc weight for {v} must be zero")]
    NonzeroDiagonal { v: usize },

    #[error("size {actual} exceeds the supported cap {limit}")]
    SizeCap { limit: usize, actual: usize },

    #[error("guess enumeration needs {needed} orderings, budget is {cap}")]
    BudgetExceeded { needed: u128, cap: u64 },

    #[error("invalid rational literal {input:?}: {reason}")]
    BadRational { input: String, reason: String },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
