//! Ordered fields the simplex can run over.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

pub trait Scalar: Clone + Debug + PartialOrd + Num + Neg<Output = Self> {
    /// Values within this distance of zero are treated as zero.
    fn tolerance() -> Self;

    fn from_int(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_negative_tol(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn is_zero_tol(&self) -> bool {
        !self.is_positive_tol() && !self.is_negative_tol()
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
    fn from_int(v: i64) -> Self {
        v as f32
    }
    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        Self::zero()
    }
    fn from_int(v: i64) -> Self {
        Self::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_positive_tol(&self) -> bool {
        self.is_positive()
    }
    fn is_negative_tol(&self) -> bool {
        self.is_negative()
    }
}

/// Closest fraction to `x` with denominator at most `max_den`, by continued fractions.
pub fn approximate(x: f64, max_den: i64) -> BigRational {
    if !x.is_finite() {
        return BigRational::zero();
    }
    let neg = x < 0.0;
    let mut rest = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e15 {
            break;
        }
        let a_i = a as i128;
        let (p2, q2) = (a_i * p1 + p0, a_i * q1 + q0);
        if q2 > max_den as i128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rest - a;
        if frac < 1e-12 {
            break;
        }
        rest = 1.0 / frac;
    }
    if q1 == 0 {
        return BigRational::zero();
    }
    let r = BigRational::new(BigInt::from(p1), BigInt::from(q1));
    if neg {
        -r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approximates_simple_fractions() {
        assert_eq!(approximate(0.5, 100), BigRational::new(1.into(), 2.into()));
        assert_eq!(approximate(-2.0 / 3.0 + 1e-13, 1000), BigRational::new((-2).into(), 3.into()));
        assert_eq!(approximate(0.0, 10), BigRational::zero());
    }
}
