//! Error type shared by every module in the crate.

use core::fmt;

/// Failure modes of the sketches and the linear-algebra substrate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operand shapes are incompatible (`expected` vs `got` refer to the
    /// offending dimension, e.g. a row length or a matrix side).
    DimensionMismatch { expected: usize, got: usize },
    /// A matrix that must be symmetric deviates from its transpose beyond
    /// the caller's tolerance.
    NotSymmetric,
    /// A scalar parameter is outside its admissible range.
    InvalidParameter(&'static str),
    /// An input contains NaN or infinite entries.
    NonFinite,
    /// Stream timestamps must be strictly increasing.
    NonMonotoneTime,
    /// A stream entry violates the integrality/boundedness contract of the
    /// ℓ1 sketch.
    EntryOutOfRange,
    /// The operation needs at least one row/element.
    Empty,
    /// Serialized state is truncated or carries a wrong header.
    Corrupt(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotSymmetric => write!(f, "matrix is not symmetric within tolerance"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::NonFinite => write!(f, "input contains non-finite entries"),
            Error::NonMonotoneTime => write!(f, "timestamps must be strictly increasing"),
            Error::EntryOutOfRange => write!(f, "entry violates the integer-boundedness contract"),
            Error::Empty => write!(f, "operation requires a non-empty input"),
            Error::Corrupt(what) => write!(f, "corrupt serialized state: {what}"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
