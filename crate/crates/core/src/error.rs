use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// produce a one-line diagnostic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },

    #[error("{divisor} does not divide the modulus {modulus}")]
    NotDivisor { divisor: u64, modulus: u64 },

    #[error("{value} is not a unit modulo {modulus}")]
    NonUnit { value: u64, modulus: u64 },

    #[error("{what}: requested {requested} exceeds the cap {cap}")]
    CapExceeded { what: &'static str, requested: u128, cap: u128 },

    #[error("empty set")]
    EmptySet,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("cache corrupted at line {line}: {reason}")]
    CacheCorrupt { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
