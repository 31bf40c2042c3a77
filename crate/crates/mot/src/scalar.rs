//! Scalar abstraction shared by the exact and floating-point pipelines.
//!
//! Certification paths run over [`Rational`] (arbitrary-precision fractions):
//! every comparison is exact and every tolerance is zero. The entropic path
//! and large experiments run over `f64` with explicit tolerances. Generic code
//! branches on [`Scalar::EXACT`] instead of sprinkling `if float` checks.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Sub};

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::MotError;

/// Arbitrary-precision rational numbers, the exact-mode scalar.
pub type Rational = num::BigRational;

/// Number type the toolkit can compute with.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Signed
    + Sum
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// True when arithmetic is exact and all default tolerances are zero.
    const EXACT: bool;

    fn from_int(value: i64) -> Self;

    /// The fraction `numer / denom`. Panics on a zero denominator.
    fn ratio(numer: i64, denom: i64) -> Self;

    /// Lossy view for display and for feeding the float pipeline.
    fn to_f64(&self) -> f64;

    /// Parse `"p/q"`, a plain integer, or a plain decimal such as `-0.25`.
    /// Exact scalars parse decimals exactly (`0.25` becomes `1/4`).
    fn parse_number(text: &str) -> Result<Self, MotError>;

    /// Shortest string that parses back to exactly this value.
    fn format_exact(&self) -> String;

    /// Comparison slack for quantities of the given magnitude: zero in exact
    /// mode, `1e-9 * (1 + |scale|)` in float mode.
    fn default_tol(scale: &Self) -> Self;
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_int(value: i64) -> Self {
        Rational::from_integer(BigInt::from(value))
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        num::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_number(text: &str) -> Result<Self, MotError> {
        parse_rational(text)
    }

    fn format_exact(&self) -> String {
        self.to_string()
    }

    fn default_tol(_scale: &Self) -> Self {
        Self::zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(value: i64) -> Self {
        value as f64
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_number(text: &str) -> Result<Self, MotError> {
        // Accept the same grammar as the exact parser, via the exact parser,
        // so documents mean the same thing in both modes.
        Ok(parse_rational(text)?.to_f64())
    }

    fn format_exact(&self) -> String {
        format!("{self}")
    }

    fn default_tol(scale: &Self) -> Self {
        1e-9 * (1.0 + scale.abs())
    }
}

fn parse_err(text: &str, message: &str) -> MotError {
    MotError::NumberParse {
        text: text.to_string(),
        message: message.to_string(),
    }
}

fn parse_rational(text: &str) -> Result<Rational, MotError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(parse_err(text, "empty string"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| parse_err(text, "bad numerator"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| parse_err(text, "bad denominator"))?;
        if d.is_zero() {
            return Err(parse_err(text, "zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let value = if let Some((int_part, frac_part)) = body.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(text, "bad fractional digits"));
        }
        if !int_part.is_empty() && !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(text, "bad integer digits"));
        }
        let int: BigInt = if int_part.is_empty() {
            BigInt::zero()
        } else {
            int_part.parse().map_err(|_| parse_err(text, "bad integer part"))?
        };
        let frac: BigInt = frac_part
            .parse()
            .map_err(|_| parse_err(text, "bad fractional part"))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        Rational::new(int * &scale + frac, scale)
    } else {
        if !body.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(text, "expected integer, decimal, or p/q"));
        }
        let n: BigInt = body.parse().map_err(|_| parse_err(text, "bad integer"))?;
        Rational::from_integer(n)
    };
    Ok(if negative { -value } else { value })
}

/// Largest absolute value in a slice, zero for an empty slice.
pub fn sup_norm<S: Scalar>(values: &[S]) -> S {
    let mut best = S::zero();
    for v in values {
        let a = v.abs();
        if a > best {
            best = a;
        }
    }
    best
}

pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

pub fn min_of<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}
