//! Arbitrary-precision binary float backed by MPFR.
//!
//! Every value carries its own precision. Binary operations round to the
//! larger of the two operand precisions, so raising the precision of the
//! inputs is enough to raise the precision of a whole computation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::Float;

use crate::scalar::{Real, Scalar};

#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigFloat(Float);

impl BigFloat {
    pub fn from_f64(v: f64, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, v))
    }

    pub fn from_i64(v: i64, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, v))
    }

    pub fn zero(bits: u32) -> Self {
        BigFloat(Float::new(bits))
    }

    pub fn pi(bits: u32) -> Self {
        BigFloat(Float::with_val(bits, Constant::Pi))
    }

    /// Parses a decimal literal, rounding to nearest at `bits`.
    pub fn parse(s: &str, bits: u32) -> Option<Self> {
        Float::parse(s.trim())
            .ok()
            .map(|inc| BigFloat(Float::with_val(bits, inc)))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    /// Decimal string with `digits` significant digits.
    pub fn to_digits(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits.max(1)))
    }

    fn prec(&self) -> u32 {
        self.0.prec()
    }
}

impl From<Float> for BigFloat {
    fn from(f: Float) -> Self {
        BigFloat(f)
    }
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}b]", self.0.to_string_radix(10, Some(24)), self.prec())
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(d) => f.write_str(&self.to_digits(d)),
            None => f.write_str(&self.to_decimal()),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&BigFloat> for &BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: &BigFloat) -> BigFloat {
                let bits = self.prec().max(rhs.prec());
                BigFloat(Float::with_val(bits, &self.0 $op &rhs.0))
            }
        }
        impl $tr<&BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: &BigFloat) -> BigFloat {
                (&self).$method(rhs)
            }
        }
        impl $tr<BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: BigFloat) -> BigFloat {
                (&self).$method(&rhs)
            }
        }
        impl $tr<BigFloat> for &BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: BigFloat) -> BigFloat {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat(-self.0)
    }
}

impl Neg for &BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat(-self.0.clone())
    }
}

macro_rules! unary {
    ($name:ident, $rug:ident) => {
        fn $name(&self) -> Self {
            BigFloat(Float::with_val(self.prec(), self.0.$rug()))
        }
    };
}

impl Scalar for BigFloat {
    fn zero_like(&self) -> Self {
        BigFloat(Float::new(self.prec()))
    }
    fn one_like(&self) -> Self {
        BigFloat(Float::with_val(self.prec(), 1))
    }
    fn from_i64_like(&self, v: i64) -> Self {
        BigFloat(Float::with_val(self.prec(), v))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn abs(&self) -> Self {
        BigFloat(self.0.clone().abs())
    }
    fn log2_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (mantissa, exp) = self.0.to_f64_exp();
        mantissa.abs().log2() + exp as f64
    }
    fn precision_hint(&self) -> Option<u32> {
        Some(self.prec())
    }
    fn mul_i64(&self, v: i64) -> Self {
        BigFloat(Float::with_val(self.prec(), &self.0 * v))
    }
}

impl Real for BigFloat {
    fn precision(&self) -> u32 {
        self.prec()
    }
    fn to_precision(&self, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, &self.0))
    }
    fn from_f64_like(&self, v: f64) -> Self {
        BigFloat(Float::with_val(self.prec(), v))
    }
    fn parse_like(&self, s: &str) -> Option<Self> {
        BigFloat::parse(s, self.prec())
    }
    fn pi_like(&self) -> Self {
        BigFloat::pi(self.prec())
    }
    unary!(sqrt, sqrt_ref);
    unary!(exp, exp_ref);
    unary!(ln, ln_ref);
    unary!(sin, sin_ref);
    unary!(cos, cos_ref);
    unary!(tan, tan_ref);
    unary!(sinh, sinh_ref);
    unary!(cosh, cosh_ref);
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn ldexp(&self, e: i32) -> Self {
        let mut x = self.0.clone();
        x <<= e;
        BigFloat(x)
    }
    fn to_decimal(&self) -> String {
        self.0.to_string_radix(10, None)
    }
    fn from_ratio_like(&self, num: i64, den: i64) -> Self {
        let bits = self.prec();
        BigFloat(Float::with_val(bits, Float::with_val(bits, num) / den))
    }
}

impl BigFloat {
    /// Total order for sorting; NaN compares equal to everything.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}
