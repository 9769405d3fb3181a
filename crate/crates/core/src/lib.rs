//! Continued fractions with bounded partial quotients, Zaremba numerator
//! search, and expansion experiments in SL2(Z/qZ).
//!
//! The numeric core is generic: continued-fraction routines accept any
//! unsigned primitive integer, and measures on SL2(Z/qZ) accept any
//! [`Scalar`]. The aliases below fix the types used by the command-line
//! driver and most tests.

pub mod arith;
pub mod contfrac;
pub mod counting;
pub mod error;
pub mod fractal;
pub mod measures;
pub mod probe;
pub mod scalar;
pub mod sl2;
pub mod zaremba;

pub use error::{Error, Result};
pub use scalar::{CfInt, Scalar};

/// Exact rational used for measure values and identities.
pub type Exact = num_rational::Ratio<i128>;

/// Reduced fraction with 64-bit parts.
pub type Fraction = contfrac::Fraction<u64>;

/// Canonical continued-fraction expansion with 64-bit quotients.
pub type Expansion = contfrac::CfExpansion<u64>;

/// Measure with exact rational values.
pub type ExactMeasure = measures::GroupMeasure<Exact>;

/// Measure with `f64` values, for quick exploratory runs.
pub type FloatMeasure = measures::GroupMeasure<f64>;
