//! Scalar abstraction so the network, losses, and optimizers can run in
//! either 64-bit (default) or 32-bit arithmetic.

use ndarray::LinalgScalar;
use num_traits::Float;

/// Floating-point scalar usable throughout the training stack.
pub trait Real:
    Float
    + LinalgScalar
    + num_traits::NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Converts an `f64` literal to the working scalar type.
#[inline(always)]
pub fn c<T: Real>(x: f64) -> T {
    T::from_f64(x)
}
