//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point types the solvers and set-function estimators run on.
///
/// Implemented for `f32` and `f64`. Literal constants are routed through
/// [`Real::lit`] so numeric code reads like ordinary `f64` code.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon scaled for "exact up to rounding" comparisons.
    const ROUNDING: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {
    const ROUNDING: f64 = 1e-5;
}

impl Real for f64 {
    const ROUNDING: f64 = 1e-12;
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
