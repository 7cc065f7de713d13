//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the crate: `f32` or `f64`.
///
/// Everything physical is computed in SI units, so the tolerances quoted in
/// the tests assume `f64`; `f32` works but with correspondingly looser error.
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Send + Sync
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Modulus of a complex number over a generic real scalar.
#[inline]
pub fn cabs<T: Real>(z: nalgebra::Complex<T>) -> T {
    z.norm_sqr().sqrt()
}
