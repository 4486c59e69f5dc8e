//! Coefficient rings for series and exact matrices.
//!
//! Everything symbolic in the crate is generic over [`Coefficient`]. The
//! reference instantiation is [`BigRational`]; `f64` is provided for quick
//! numeric experiments where exactness is not required.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A field of series coefficients.
pub trait Coefficient:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_rational64(r: Rational64) -> Self {
        Self::from_ratio(*r.numer(), *r.denom())
    }

    fn to_f64(&self) -> f64;

    /// Parses `"p"`, `"p/q"` or (for inexact types) a decimal literal.
    fn parse_coeff(s: &str) -> Option<Self>;

    /// Canonical text form, re-parseable by [`Coefficient::parse_coeff`].
    fn format_coeff(&self) -> String;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Coefficient for BigRational {
    const EXACT: bool = true;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        // Ratio::to_f64 handles numerators/denominators beyond f64 range.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_coeff(s: &str) -> Option<Self> {
        parse_big_rational(s)
    }

    fn format_coeff(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

impl Coefficient for f64 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_coeff(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            Some(n / d)
        } else {
            s.parse().ok()
        }
    }

    fn format_coeff(&self) -> String {
        format!("{:?}", self)
    }
}

/// Parses an exact rational literal `"p"` or `"p/q"` (q ≠ 0).
pub fn parse_big_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).ok()?;
            let d = BigInt::from_str(d.trim()).ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => BigInt::from_str(s).ok().map(BigRational::from_integer),
    }
}

/// Parses a small exact rational (used for exponents).
pub fn parse_rational64(s: &str) -> Option<Rational64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            Some(Rational64::new(n, d))
        }
        None => s.parse::<i64>().ok().map(Rational64::from_integer),
    }
}

pub fn format_rational64(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
