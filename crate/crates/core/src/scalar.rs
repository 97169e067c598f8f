//! Scalar abstractions shared by every numeric routine in the crate.
//!
//! [`Scalar`] is the field interface (exact rationals, `f64` and
//! [`BigFloat`](crate::BigFloat) all implement it). [`Real`] adds the
//! transcendental functions and a notion of working precision, and is only
//! implemented by the floating point types.
//!
//! Constants are produced relative to an existing value (`zero_like`,
//! `from_i64_like`, ...) so that an arbitrary-precision value can hand its
//! precision to everything derived from it.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn from_i64_like(&self, v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;
    /// `log2 |x|`, `-inf` for zero.
    fn log2_abs(&self) -> f64;
    /// Working precision in bits, `None` for exact arithmetic.
    fn precision_hint(&self) -> Option<u32>;

    /// True when `|x|` is too small to divide by safely at the working
    /// precision (`< 2^(-bits/2)`), or exactly zero for exact types.
    fn is_negligible(&self) -> bool {
        match self.precision_hint() {
            None => self.is_zero(),
            Some(bits) => self.is_zero() || self.log2_abs() < -(bits as f64) / 2.0,
        }
    }

    fn mul_i64(&self, v: i64) -> Self {
        self.clone() * self.from_i64_like(v)
    }

    fn is_positive(&self) -> bool {
        *self > self.zero_like()
    }
}

/// Integer power by repeated squaring; negative exponents invert.
pub fn powi<S: Scalar>(x: &S, n: i64) -> S {
    let mut result = x.one_like();
    let mut base = x.clone();
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result = result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = base.clone() * &base;
        }
    }
    if n < 0 {
        x.one_like() / result
    } else {
        result
    }
}

/// `k!` in the scalar type of `like`.
pub fn factorial<S: Scalar>(like: &S, k: u64) -> S {
    (2..=k as i64).fold(like.one_like(), |acc, j| acc.mul_i64(j))
}

pub trait Real: Scalar {
    fn precision(&self) -> u32;
    /// Same value rounded (or exactly extended) to `bits` of precision.
    fn to_precision(&self, bits: u32) -> Self;
    fn from_f64_like(&self, v: f64) -> Self;
    /// Parse a decimal literal at this value's precision, round-to-nearest.
    fn parse_like(&self, s: &str) -> Option<Self>;
    fn pi_like(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// Multiply by `2^e` exactly.
    fn ldexp(&self, e: i32) -> Self;
    /// Decimal representation carrying every significant digit.
    fn to_decimal(&self) -> String;

    fn epsilon_like(&self) -> Self {
        self.one_like().ldexp(-(self.precision() as i32))
    }

    fn from_ratio_like(&self, num: i64, den: i64) -> Self {
        self.from_i64_like(num) / self.from_i64_like(den)
    }

    fn powf(&self, e: &Self) -> Self {
        (self.ln() * e).exp()
    }

    fn max_of(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }
}

impl Scalar for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn one_like(&self) -> Self {
        1.0
    }
    fn from_i64_like(&self, v: i64) -> Self {
        v as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn log2_abs(&self) -> f64 {
        f64::abs(*self).log2()
    }
    fn precision_hint(&self) -> Option<u32> {
        Some(f64::MANTISSA_DIGITS)
    }
}

impl Real for f64 {
    fn precision(&self) -> u32 {
        f64::MANTISSA_DIGITS
    }
    fn to_precision(&self, _bits: u32) -> Self {
        *self
    }
    fn from_f64_like(&self, v: f64) -> Self {
        v
    }
    fn parse_like(&self, s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn pi_like(&self) -> Self {
        std::f64::consts::PI
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn ldexp(&self, e: i32) -> Self {
        self * 2f64.powi(e)
    }
    fn to_decimal(&self) -> String {
        format!("{self:e}")
    }
}

impl Scalar for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn from_i64_like(&self, v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn log2_abs(&self) -> f64 {
        if Zero::is_zero(self) {
            return f64::NEG_INFINITY;
        }
        let n = self.numer().abs();
        let d = self.denom();
        // shift both to ~60 significant bits before converting
        let shift_n = n.bits().saturating_sub(60);
        let shift_d = d.bits().saturating_sub(60);
        let nf = (&n >> shift_n).to_f64().unwrap_or(f64::MAX);
        let df = (d >> shift_d).to_f64().unwrap_or(f64::MAX);
        nf.log2() - df.log2() + shift_n as f64 - shift_d as f64
    }
    fn precision_hint(&self) -> Option<u32> {
        None
    }
}

/// Rounds an exact rational into the precision of `like`.
pub fn rational_to_real<R: Real>(x: &BigRational, like: &R) -> R {
    let num = like
        .parse_like(&x.numer().to_string())
        .expect("integer literal");
    let den = like
        .parse_like(&x.denom().to_string())
        .expect("integer literal");
    num / den
}
