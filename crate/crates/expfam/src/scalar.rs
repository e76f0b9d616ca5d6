//! Scalar abstraction for the numeric core.
//!
//! Everything downstream is generic over [`Scalar`], which bundles the
//! floating-point behaviour the estimators rely on. `f32` and `f64` both
//! qualify; the aliases at the crate root pin `f64`, which is the type the
//! documented tolerances assume.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + Sum
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Pulls an `f64` literal into the scalar type.
pub(crate) fn cast<S: Scalar>(value: f64) -> S {
    S::from_f64(value).expect("literal must be representable in the scalar type")
}

/// Converts a trial count. Counts stay far below 2^24, so the conversion is
/// exact even for `f32`.
pub(crate) fn count<S: Scalar>(n: u64) -> S {
    S::from_u64(n).expect("count must be representable in the scalar type")
}
