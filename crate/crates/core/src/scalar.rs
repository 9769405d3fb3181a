//! Numeric traits the rest of the crate is generic over.
//!
//! Continued-fraction code works over any unsigned primitive integer
//! ([`CfInt`]). Measures on SL2(Z/qZ) carry values of any [`Scalar`]: exact
//! rationals for identities that must hold on the nose, floats for quick
//! exploratory runs.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, PrimInt, ToPrimitive, Unsigned};

/// Unsigned integer type usable for continued-fraction arithmetic.
pub trait CfInt:
    PrimInt + Unsigned + Integer + FromPrimitive + Debug + Display + Hash + Send + Sync + 'static
{
    fn to_u128(self) -> u128 {
        ToPrimitive::to_u128(&self).expect("unsigned primitive fits u128")
    }
}

impl<T> CfInt for T where
    T: PrimInt + Unsigned + Integer + FromPrimitive + Debug + Display + Hash + Send + Sync + 'static
{
}

/// Value type of a measure on a finite group.
pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// Whether arithmetic is exact; identities are compared with `==` only
    /// when this is true.
    const EXACT: bool;

    fn from_count(n: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// Text form used in reports: `num/den` for rationals, shortest
    /// round-trip decimal for floats.
    fn render(&self) -> String;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    fn from_count(n: u64) -> Self {
        n as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! ratio_scalar {
    ($int:ty) => {
        impl Scalar for Ratio<$int> {
            const EXACT: bool = true;
            fn from_count(n: u64) -> Self {
                Ratio::from_integer(<$int>::try_from(n).expect("count fits"))
            }
            fn to_f64(&self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
            fn render(&self) -> String {
                format!("{}/{}", self.numer(), self.denom())
            }
        }
    };
}

ratio_scalar!(i64);
ratio_scalar!(i128);

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}
