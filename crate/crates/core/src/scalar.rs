//! Scalar abstraction: the numerical core is generic over the floating-point
//! type. `f64` is the default for production runs; `f32` builds are useful
//! for quick resolution scans.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;
use std::iter::Sum;

/// Floating-point scalar usable in spectral kernels.
pub trait Real: FftNum + Float + FloatConst + FromPrimitive + NumAssign + Sum {}

impl<T> Real for T where T: FftNum + Float + FloatConst + FromPrimitive + NumAssign + Sum {}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}
