//! Double-exponential quadrature on the half line.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_LEVEL: u32 = 14;
const MAX_ABSCISSA: f64 = 40.0;

/// `int_0^inf f(x) dx` for `f` smooth on `[0, inf)` with at least
/// exponential decay, via `x = exp(u - exp(-u))` and the trapezoid rule.
///
/// The step is halved until two successive estimates agree to half the
/// working precision; DE convergence then squares the error, which puts
/// the result at full precision.
pub fn exp_sinh<R: Real>(like: &R, f: impl Fn(&R) -> R) -> Result<R> {
    let bits = like.precision();
    let node = |u: &R| -> (R, R) {
        let e = (-u.clone()).exp();
        let x = (u.clone() - &e).exp();
        let dx = x.clone() * &(like.one_like() + &e);
        (x, dx)
    };
    let eval = |u: &R| -> R {
        let (x, dx) = node(u);
        if x.is_zero() || dx.is_zero() {
            return like.zero_like();
        }
        f(&x) * &dx
    };
    let mut h = like.one_like();
    // sum over odd multiples of h (plus the origin at level 0)
    let mut sum = side_sums(like, &h, 1, &eval, bits)?;
    sum = sum + &eval(&like.zero_like());
    let mut estimate = sum.clone() * &h;
    for _ in 1..=MAX_LEVEL {
        h = h.ldexp(-1);
        let odd = side_sums(like, &h, 2, &eval, bits)?;
        sum = sum + &odd;
        let next = sum.clone() * &h;
        let diff = (next.clone() - &estimate).abs();
        let scale = next.abs();
        estimate = next;
        if diff.is_zero() || diff.log2_abs() - scale.log2_abs() < -(bits as f64 / 2.0 + 8.0) {
            return Ok(estimate);
        }
    }
    Err(Error::Quadrature(format!(
        "no convergence after {MAX_LEVEL} step halvings"
    )))
}

/// `sum_{k >= 1, k = 1 mod stride} g(+-k h)`, stopping on each side once
/// three consecutive terms are below `2^-(bits+16)` of the running sum.
fn side_sums<R: Real>(like: &R, h: &R, stride: i64, g: &impl Fn(&R) -> R, bits: u32) -> Result<R> {
    let mut total = like.zero_like();
    for sign in [1i64, -1] {
        let mut k = 1i64;
        let mut small = 0;
        loop {
            let u = h.mul_i64(sign * k);
            if u.abs().to_f64() > MAX_ABSCISSA {
                return Err(Error::Quadrature(format!(
                    "integrand not negligible at |u| = {MAX_ABSCISSA}"
                )));
            }
            let term = g(&u);
            let negligible = term.is_zero()
                || (!total.is_zero() && term.log2_abs() - total.log2_abs() < -(bits as f64 + 16.0));
            total = total + &term;
            // terms towards +inf may grow before they decay
            if negligible && (sign < 0 || u.to_f64() > 1.0) {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
            k += stride;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::BigFloat;
    use crate::scalar::Scalar;

    const BITS: u32 = 256;

    fn bf(x: f64) -> BigFloat {
        BigFloat::from_f64(x, BITS)
    }

    fn rel(a: &BigFloat, b: &BigFloat) -> f64 {
        ((a.clone() - b) / b).abs().to_f64()
    }

    #[test]
    fn exponential() {
        let one = bf(1.0);
        let v = exp_sinh(&one, |x| (-x.clone()).exp()).unwrap();
        assert!(rel(&v, &one) < 1e-70);
        let v = exp_sinh(&one, |x| (-x.mul_i64(3)).exp()).unwrap();
        assert!(rel(&v, &(bf(1.0) / bf(3.0))) < 1e-70);
    }

    #[test]
    fn slow_decay_and_power_factor() {
        // int x^2 e^{-x/10} = 2 * 10^3
        let one = bf(1.0);
        let v = exp_sinh(&one, |x| x.clone() * x * (-(x.clone() / bf(10.0))).exp()).unwrap();
        assert!(rel(&v, &bf(2000.0)) < 1e-70);
    }

    #[test]
    fn fermi_type_integrand() {
        // int_0^inf x / (e^x + 1) dx = pi^2 / 12
        let one = bf(1.0);
        let v = exp_sinh(&one, |x| {
            let e = (-x.clone()).exp();
            x.clone() * &e / (bf(1.0) + &e)
        })
        .unwrap();
        let pi = BigFloat::pi(BITS);
        assert!(rel(&v, &(pi.clone() * &pi / bf(12.0))) < 1e-70);
    }

    #[test]
    fn non_decaying_integrand_fails() {
        let one = bf(1.0);
        assert!(matches!(exp_sinh(&one, |_| bf(1.0)), Err(Error::Quadrature(_))));
    }
}
