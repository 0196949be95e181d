//! Scalar abstraction shared by every algorithmic module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

use crate::numerics;

/// Floating-point scalar usable throughout the detector and the analysis.
///
/// Implemented for `f32` and `f64`. The error functions always evaluate
/// through the double-precision kernel and round once at the end, so an
/// `f32` instantiation loses nothing beyond its own precision.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn of(value: f64) -> Self;

    /// Widens this scalar to `f64`.
    fn as_f64(self) -> f64;

    /// Error function.
    fn erf(self) -> Self {
        Self::of(numerics::erf_kernel(self.as_f64()))
    }

    /// Complementary error function.
    fn erfc(self) -> Self {
        Self::of(numerics::erfc_kernel(self.as_f64()))
    }
}

impl Real for f64 {
    fn of(value: f64) -> Self {
        value
    }

    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn of(value: f64) -> Self {
        value as f32
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}
