use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u32),

    #[error("digit {digit} out of range for prime {prime}")]
    DigitOutOfRange { digit: u32, prime: u32 },

    #[error("operands use different primes ({0} and {1})")]
    PrimeMismatch(u32, u32),

    #[error("digit at index {needed} lies outside the known window (precision {precision})")]
    TruncationOverflow { needed: i64, precision: i64 },

    #[error("index {index} is below the minimum {min} for level {level}")]
    IndexBelowMinimum { index: i64, min: i64, level: u32 },

    #[error("shell index {index} exceeds the representable cap {cap}")]
    ShellCapExceeded { index: i64, cap: i64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("h=1 is the isotropic family")]
    IsotropicEndpoint,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),

    #[error("empty history")]
    EmptyHistory,

    #[error("history times must be strictly increasing")]
    NonIncreasingTimes,

    #[error("ball radius below lattice resolution at level {level}")]
    BelowLatticeResolution { level: u32 },

    #[error("{0} requires a two-dimensional law")]
    NeedsTwoDimensions(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
