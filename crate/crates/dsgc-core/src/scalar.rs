//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate that does real arithmetic is generic over
//! [`Scalar`], so the same code runs in `f32` or `f64`. Concrete type
//! aliases for `f64` live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Convert from `f64`, panicking only for exotic scalar types that
    /// cannot represent ordinary constants.
    fn from_f64_s(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    /// Convert to `f64` for reporting.
    fn to_f64_s(self) -> f64 {
        self.to_f64().expect("scalar conversion to f64")
    }

    fn from_usize_s(v: usize) -> Self {
        Self::from_usize(v).expect("scalar conversion from usize")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
