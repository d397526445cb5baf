//! The scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;

/// Floating-point scalar usable by the tape, the model and the optimizer.
///
/// `f32` and `f64` implement it; both hit ndarray's fast matrix-multiply
/// path. Conversions route through `f64` so that seeded initialization
/// draws the same stream at either precision.
pub trait Scalar:
    Float + LinalgScalar + ScalarOperand + Sum + Display + Debug + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
