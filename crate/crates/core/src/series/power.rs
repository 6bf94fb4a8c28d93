//! Truncated power series `c_0 + c_1 x + ... + c_N x^N`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::real::Real;
use crate::{Error, Result};

/// A power series truncated after `x^N`. Binary operations between series of
/// different orders truncate to the smaller order.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<Real>,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<Real>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("a power series needs at least one coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn from_f64(coeffs: &[f64], precision: usize) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Real::from_f64(c, precision)).collect())
    }

    pub fn constant(c: Real, order: usize) -> Self {
        let p = c.precision();
        let mut coeffs = vec![Real::zero(p); order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    pub fn zero(order: usize, precision: usize) -> Self {
        Self::constant(Real::zero(precision), order)
    }

    pub fn one(order: usize, precision: usize) -> Self {
        Self::constant(Real::one(precision), order)
    }

    /// The series `x`.
    pub fn identity(order: usize, precision: usize) -> Self {
        let mut s = Self::zero(order, precision);
        if order >= 1 {
            s.coeffs[1] = Real::one(precision);
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn precision(&self) -> usize {
        self.coeffs.iter().map(Real::precision).max().unwrap_or(0)
    }

    pub fn coeff(&self, n: usize) -> &Real {
        &self.coeffs[n]
    }

    pub fn coefficients(&self) -> &[Real] {
        &self.coeffs
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.coeffs.iter().map(Real::to_f64).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = (order + 1).min(self.coeffs.len());
        Self { coeffs: self.coeffs[..keep].to_vec() }
    }

    pub fn scale(&self, c: &Real) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn add_constant(&self, c: &Real) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = &out.coeffs[0] + c;
        out
    }

    pub fn recip(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::Precondition("reciprocal of a series with zero constant term".into()));
        }
        let p = self.precision();
        let mut b: Vec<Real> = Vec::with_capacity(self.coeffs.len());
        b.push(&Real::one(p) / a0);
        for n in 1..self.coeffs.len() {
            let mut acc = Real::zero(p);
            for k in 1..=n {
                acc = acc + &self.coeffs[k] * &b[n - k];
            }
            b.push(-(acc / a0));
        }
        Ok(Self { coeffs: b })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.recip()?)
    }

    pub fn sqrt(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if !a0.is_positive() {
            return Err(Error::Precondition("square root needs a positive constant term".into()));
        }
        let b0 = a0.sqrt();
        let two_b0 = &b0 + &b0;
        let mut b = vec![b0];
        for n in 1..self.coeffs.len() {
            let mut acc = self.coeffs[n].clone();
            for k in 1..n {
                acc = acc - &b[k] * &b[n - k];
            }
            b.push(acc / &two_b0);
        }
        Ok(Self { coeffs: b })
    }

    /// `self(inner(x))` for an inner series without constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::Precondition("inner series of a composition must vanish at 0".into()));
        }
        let order = self.order().min(inner.order());
        let inner = inner.truncate(order);
        let mut acc = Self::constant(self.coeffs[self.coeffs.len() - 1].clone(), order);
        for c in self.coeffs.iter().rev().skip(1) {
            acc = (&acc * &inner).add_constant(c);
        }
        Ok(acc.truncate(order))
    }

    /// Antiderivative with constant term `c0`, kept at the same order.
    pub fn integrate(&self, c0: Real) -> Self {
        let p = self.precision();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        coeffs.push(c0);
        for (k, a) in self.coeffs.iter().enumerate().take(self.order()) {
            coeffs.push(a / &Real::from_i64(k as i64 + 1, p));
        }
        Self { coeffs }
    }

    /// Derivative; the order drops by one (an order-0 series becomes `0`).
    pub fn derivative(&self) -> Self {
        let p = self.precision();
        if self.order() == 0 {
            return Self::zero(0, p);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| a * &Real::from_i64(k as i64, p))
            .collect();
        Self { coeffs }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        horner_complex(&self.to_f64_vec(), z)
    }
}

pub(crate) fn horner_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

impl Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, rhs: &PowerSeries) -> PowerSeries {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        PowerSeries { coeffs }
    }
}

impl Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, rhs: &PowerSeries) -> PowerSeries {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        PowerSeries { coeffs }
    }
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, rhs: &PowerSeries) -> PowerSeries {
        let len = self.coeffs.len().min(rhs.coeffs.len());
        let p = self.precision().max(rhs.precision());
        let coeffs = (0..len)
            .map(|n| {
                (0..=n).fold(Real::zero(p), |acc, k| acc + &self.coeffs[k] * &rhs.coeffs[n - k])
            })
            .collect();
        PowerSeries { coeffs }
    }
}

impl Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        PowerSeries { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
}
