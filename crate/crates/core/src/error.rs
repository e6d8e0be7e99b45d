use alloc::string::String;

/// Errors raised by the imaging pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("order 2^{requested} exceeds the size cap 2^{cap}")]
    SizeLimit { requested: u32, cap: u32 },

    #[error("pattern index ({u}, {v}) out of range for tier {tier}")]
    PatternIndex { tier: u32, u: usize, v: usize },

    #[error("sequence index {m} out of range: only {len} patterns exist at top tier {top_tier}")]
    SequenceIndex { m: u64, len: u64, top_tier: u32 },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("grid is not square: {len} values")]
    NotSquare { len: usize },

    #[error("size mismatch: expected side {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid acquisition plan: {0}")]
    InvalidPlan(String),

    #[error("invalid bucket record: {0}")]
    InvalidRecord(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measurement count {0} is not a completed tier (4^k)")]
    IncompleteTier(usize),

    #[error("no target found above threshold")]
    NoTarget,

    #[error("region of interest does not fit: {0}")]
    RoiOutOfFrame(String),
}

pub type Result<T> = core::result::Result<T, Error>;
