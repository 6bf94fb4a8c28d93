//! Arbitrary-precision binary floating point numbers.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

type Big = FBig<HalfEven>;

/// Default working precision in bits.
pub const DEFAULT_PRECISION: usize = 128;

/// A binary floating point number carrying its own precision in bits.
///
/// Arithmetic between two values rounds to the larger of the two precisions.
#[derive(Clone, Debug, PartialEq)]
pub struct Real(Big);

impl Real {
    /// Exact conversion of `x`, then rounding to `precision` bits.
    ///
    /// # Panics
    /// If `x` is not finite.
    pub fn from_f64(x: f64, precision: usize) -> Self {
        assert!(x.is_finite(), "cannot represent {x}");
        Real(Big::try_from(x).expect("finite").with_precision(precision).value())
    }

    /// # Panics
    /// If `|n| >= 2^53`.
    pub fn from_i64(n: i64, precision: usize) -> Self {
        assert!(n.unsigned_abs() < (1u64 << 53), "{n} is not exactly representable");
        Self::from_f64(n as f64, precision)
    }

    pub fn ratio(num: i64, den: i64, precision: usize) -> Self {
        &Self::from_i64(num, precision) / &Self::from_i64(den, precision)
    }

    pub fn zero(precision: usize) -> Self {
        Self::from_f64(0.0, precision)
    }

    pub fn one(precision: usize) -> Self {
        Self::from_f64(1.0, precision)
    }

    pub fn pi(precision: usize) -> Self {
        Real(Big::pi(precision))
    }

    pub fn precision(&self) -> usize {
        self.0.precision()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == Big::ZERO
    }

    pub fn is_positive(&self) -> bool {
        self.0 > Big::ZERO
    }

    pub fn is_negative(&self) -> bool {
        self.0 < Big::ZERO
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// # Panics
    /// If `self` is negative.
    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "square root of a negative number");
        if self.is_zero() {
            return self.clone();
        }
        Real(self.0.sqrt())
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one(self.precision());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl std::fmt::Display for Real {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                Real(&self.0 $op &rhs.0)
            }
        }

        impl $trait<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                Real(self.0 $op rhs.0)
            }
        }

        impl $trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                Real(self.0 $op &rhs.0)
            }
        }
    };
}

binary_op!(Add, add, +);
binary_op!(Sub, sub, -);
binary_op!(Mul, mul, *);
binary_op!(Div, div, /);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0.clone())
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_beyond_double_precision() {
        let p = 200;
        let third = Real::ratio(1, 3, p);
        let back = &third * &Real::from_i64(3, p);
        let diff = (&back - &Real::one(p)).abs();
        assert!(diff.to_f64() < 1e-58);
        assert_eq!(third.precision(), p);
    }

    #[test]
    fn pi_and_sqrt() {
        let p = 128;
        assert_eq!(Real::pi(p).to_f64(), std::f64::consts::PI);
        let two = Real::from_i64(2, p);
        let r = two.sqrt();
        assert_eq!(r.to_f64(), std::f64::consts::SQRT_2);
        let err = (&(&r * &r) - &two).abs();
        assert!(err.to_f64() < 1e-37);
        assert!(Real::zero(p).sqrt().is_zero());
    }

    #[test]
    fn ordering_and_signs() {
        let p = 64;
        let a = Real::from_f64(-1.5, p);
        assert!(a.is_negative() && !a.is_positive());
        assert!(a < Real::zero(p));
        assert_eq!(a.abs().to_f64(), 1.5);
        assert_eq!(Real::from_f64(2.0, p).powi(10).to_f64(), 1024.0);
    }
}
