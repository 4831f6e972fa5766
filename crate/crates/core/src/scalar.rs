//! Scalar abstraction: every numerical kernel is generic over `Scalar`,
//! implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating-point scalar usable in all kernels.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, panicking on overflow.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn to_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("scalar not representable as f64")
    }

    #[inline]
    fn from_index(i: usize) -> Self {
        Self::from_usize(i).expect("index not representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::one() / Self::two()
    }

    /// 2π.
    #[inline]
    fn tau() -> Self {
        Self::PI() + Self::PI()
    }

    /// Step size for centered differences of smooth analytic evaluators.
    #[inline]
    fn fd_step() -> Self {
        Self::epsilon().powf(Self::lit(1.0 / 3.0))
    }

    /// Wraps `x` into `[0, 2π)`.
    #[inline]
    fn wrap_tau(self) -> Self {
        let tau = Self::tau();
        let r = self % tau;
        if r < Self::zero() {
            r + tau
        } else {
            r
        }
    }

    /// Wraps `x` into `(-π, π]`.
    #[inline]
    fn wrap_pi(self) -> Self {
        let w = self.wrap_tau();
        if w > Self::PI() {
            w - Self::tau()
        } else {
            w
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_ranges() {
        for &x in &[-7.0f64, -3.2, 0.0, 1.0, 6.2831853, 12.0] {
            let t = x.wrap_tau();
            assert!((0.0..std::f64::consts::TAU).contains(&t), "{t}");
            let p = x.wrap_pi();
            assert!(p > -std::f64::consts::PI && p <= std::f64::consts::PI);
            // Both agree with x modulo 2π.
            assert!(((t - x) / std::f64::consts::TAU).fract().abs() < 1e-12);
        }
    }

    #[test]
    fn generic_literals() {
        fn probe<S: Scalar>() -> S {
            S::lit(0.5) * S::two() + S::tau() - S::tau()
        }
        assert_eq!(probe::<f64>(), 1.0);
        assert_eq!(probe::<f32>(), 1.0);
    }
}
