//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar the library is generic over (`f32` or `f64`).
///
/// `RealField` supplies the arithmetic and transcendental functions as well as
/// the eigensolvers; the num-traits conversions are used for literals and for
/// reporting.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Lossy conversion to `f64` for messages and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Tolerance `base` floored at a small multiple of the machine epsilon of `T`.
///
/// For `f64` every tolerance used in the crate is above the floor, so this is
/// the identity; for `f32` it keeps roundoff from tripping checks.
#[inline]
pub fn tol<T: Real>(base: f64) -> T {
    let floor = T::default_epsilon() * lit(64.0);
    let base = lit::<T>(base);
    if base > floor {
        base
    } else {
        floor
    }
}

/// Not-a-number sentinel for undefined matrix entries.
#[inline]
pub fn nan<T: Real>() -> T {
    lit(f64::NAN)
}

/// `-x ln x` with `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlnx_neg<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        -x * x.ln()
    }
}
