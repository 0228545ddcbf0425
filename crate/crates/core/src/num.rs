//! Numeric backends.
//!
//! Every pricing routine is generic over [`Scalar`]. Two backends exist:
//! [`Exact`] (arbitrary-precision rationals, the reference semantics) and
//! `f64` (the fast path used for sweeps and bulk replay). The exact backend
//! is closed under the four field operations, so constant-product updates,
//! GMM quotes and sandwich closed forms are evaluated without rounding.
//! Square roots are the one exception: they are exact for perfect squares and
//! otherwise truncated to [`SQRT_DIGITS`] decimal digits.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used on the reference path.
pub type Exact = BigRational;

/// Decimal digits kept by the rational square root when the argument is not
/// a perfect square.
pub const SQRT_DIGITS: u32 = 60;

/// Field-like number type the engine is generic over.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_int(v: i64) -> Self;

    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Converts a binary float. The exact backend keeps the float's exact
    /// dyadic value.
    fn from_f64(v: f64) -> Self;

    /// Parses a plain decimal literal such as `-12.5` or `400000`.
    fn parse_decimal(s: &str) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Exact rational value (a float converts to its dyadic value).
    fn to_exact(&self) -> Exact;

    /// Nearest representable value of an exact rational.
    fn from_exact(q: &Exact) -> Self;

    fn sqrt(&self) -> Self;

    /// True for backends that never round field operations.
    fn is_exact() -> bool;

    /// Relative tolerance used by iterative procedures to decide that two
    /// values coincide. Zero on the exact backend.
    fn rel_tolerance() -> f64;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn abs_val(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    /// `a == b` up to [`Scalar::rel_tolerance`] relative to `scale`.
    fn close_to(&self, other: &Self, scale: &Self) -> bool {
        let diff = (self.clone() - other.clone()).abs_val();
        if Self::is_exact() {
            diff.is_zero()
        } else {
            diff.to_f64() <= Self::rel_tolerance() * scale.abs_val().to_f64()
        }
    }
}

impl Scalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        parse_decimal_exact(s).and_then(|q| ToPrimitive::to_f64(&q))
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_exact(&self) -> Exact {
        Exact::from_f64(*self)
    }

    fn from_exact(q: &Exact) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn is_exact() -> bool {
        false
    }

    fn rel_tolerance() -> f64 {
        1e-12
    }
}

impl Scalar for Exact {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(BigRational::zero)
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        parse_decimal_exact(s)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_exact(&self) -> Exact {
        self.clone()
    }

    fn from_exact(q: &Exact) -> Self {
        q.clone()
    }

    fn sqrt(&self) -> Self {
        rational_sqrt(self)
    }

    fn is_exact() -> bool {
        true
    }

    fn rel_tolerance() -> f64 {
        0.0
    }
}

/// Square root of a nonnegative rational.
///
/// Exact when numerator and denominator are perfect squares (the reduced form
/// makes this an if-and-only-if test for rational roots), otherwise the root
/// truncated to [`SQRT_DIGITS`] significant decimal places.
pub fn rational_sqrt(q: &Exact) -> Exact {
    if !Signed::is_positive(q) {
        return Exact::zero();
    }
    let num = q.numer();
    let den = q.denom();
    let rn = num.sqrt();
    let rd = den.sqrt();
    if &(&rn * &rn) == num && &(&rd * &rd) == den {
        return BigRational::new(rn, rd);
    }
    // sqrt(n/d) = sqrt(n*d)/d, scaled so the integer root carries enough digits.
    let digits = SQRT_DIGITS.max(magnitude_digits(q));
    let scale = BigInt::from(10u32).pow(digits);
    let radicand = num * den * &scale * &scale;
    BigRational::new(radicand.sqrt(), den * scale)
}

fn magnitude_digits(q: &Exact) -> u32 {
    // Extra digits for very small arguments so the relative precision holds.
    let n_bits = q.numer().bits();
    let d_bits = q.denom().bits();
    if d_bits > n_bits {
        SQRT_DIGITS + ((d_bits - n_bits) as f64 * std::f64::consts::LOG10_2 / 2.0).ceil() as u32
    } else {
        SQRT_DIGITS
    }
}

/// Parses `[-]digits[.digits]` into an exact rational.
pub fn parse_decimal_exact(s: &str) -> Option<Exact> {
    let s = s.trim();
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::parse_bytes(digits.as_bytes(), 10)?;
    if negative {
        numer = -numer;
    }
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(numer, denom))
}

/// Renders a scalar with a fixed number of decimals, for tables.
pub fn display_fixed<T: Scalar>(v: &T, decimals: usize) -> String {
    format!("{:.*}", decimals, v.to_f64())
}

/// Exact decimal expansion of a rational, truncated to `decimals` places.
pub fn exact_to_decimal_string(q: &Exact, decimals: u32) -> String {
    let scale = BigInt::from(10u32).pow(decimals);
    let scaled = (q * BigRational::from_integer(scale)).trunc().to_integer();
    let negative = scaled.sign() == Sign::Minus;
    let digits = scaled.abs().to_string();
    let d = decimals as usize;
    let padded = if digits.len() <= d {
        format!("{}{}", "0".repeat(d + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (i, f) = padded.split_at(padded.len() - d);
    let sign = if negative { "-" } else { "" };
    if d == 0 {
        format!("{sign}{i}")
    } else {
        format!("{sign}{i}.{f}")
    }
}

/// Shortest exact decimal expansion of a rational whose denominator divides a
/// power of ten (up to `max_decimals` places); other values are truncated to
/// `max_decimals` places.
pub fn exact_to_decimal_min(q: &Exact, max_decimals: u32) -> String {
    let ten = BigInt::from(10u32);
    let mut scale = BigInt::from(1u32);
    for d in 0..=max_decimals {
        if (q.numer() * &scale) % q.denom() == BigInt::zero() {
            return exact_to_decimal_string(q, d);
        }
        scale *= &ten;
    }
    exact_to_decimal_string(q, max_decimals)
}
