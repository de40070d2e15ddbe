//! Scalar abstraction shared by the numerical modules.
//!
//! Everything below the simulator is written against [`Real`], so the same
//! code runs in `f64` (the default used by the CLI and simulator) and `f32`.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point scalar usable by the LTI, wave and metrics code.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + FftNum + Default {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    #[inline]
    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    /// Condition-number ceiling above which a matrix is treated as singular.
    ///
    /// 1e12 in double precision; scaled down to the precision of narrower types.
    fn cond_limit() -> Self {
        let by_eps = Self::lit(1e-2) / Self::default_epsilon();
        let cap = Self::lit(1e12);
        if by_eps < cap {
            by_eps
        } else {
            cap
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    ComplexField::modulus(z)
}

/// Argument (phase) of a complex number.
#[inline]
pub fn carg<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// `exp(i·theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn cplx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
