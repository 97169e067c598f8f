//! Jacobi theta functions for a real nome, and Meixner norms.

use crate::error::{Error, Result};
use crate::scalar::{factorial, powi, Real, Scalar};

const MAX_THETA_TERMS: usize = 1 << 20;

/// `q = exp(-pi^2 / (2 gamma))`.
pub fn nome<R: Real>(gamma: &R) -> Result<R> {
    if !gamma.is_positive() {
        return Err(Error::Underflow);
    }
    let pi = gamma.pi_like();
    let q = (-(pi.clone() * &pi) / gamma.mul_i64(2)).exp();
    if q.is_zero() {
        return Err(Error::Underflow);
    }
    Ok(q)
}

/// Real nome with its truncation index: `q^(N*^2) < 2^-bits`.
#[derive(Clone, Debug)]
pub struct ThetaContext<R> {
    q: R,
    q_quarter: R,
    terms: usize,
}

impl<R: Real> ThetaContext<R> {
    pub fn new(q: R) -> Result<Self> {
        if !q.is_positive() || q >= q.one_like() {
            return Err(Error::Underflow);
        }
        let bits = q.precision() as f64;
        // -log2 q per unit of n^2
        let decay = -q.log2_abs();
        let terms = ((bits + 2.0) / decay).sqrt().ceil() as usize + 1;
        if terms > MAX_THETA_TERMS {
            return Err(Error::ResourceLimit {
                what: "theta series terms",
                requested: terms as u64,
                limit: MAX_THETA_TERMS as u64,
            });
        }
        let q_quarter = q.sqrt().sqrt();
        Ok(ThetaContext {
            q,
            q_quarter,
            terms,
        })
    }

    pub fn from_gamma(gamma: &R) -> Result<Self> {
        ThetaContext::new(nome(gamma)?)
    }

    pub fn q(&self) -> &R {
        &self.q
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// `q^(n^2)` for `n = 0..terms`, and `q^(n^2 + n)`.
    fn powers(&self) -> (Vec<R>, Vec<R>) {
        let mut sq = Vec::with_capacity(self.terms + 1);
        let mut rect = Vec::with_capacity(self.terms + 1);
        let mut p = self.q.one_like();
        let mut step = self.q.clone();
        // q^((n+1)^2) = q^(n^2) q^(2n+1), q^(n^2+n) = q^(n^2) q^n
        let mut qn = self.q.one_like();
        let q2 = self.q.clone() * &self.q;
        for _ in 0..=self.terms {
            sq.push(p.clone());
            rect.push(p.clone() * &qn);
            p = p * &step;
            step = step * &q2;
            qn = qn * &self.q;
        }
        (sq, rect)
    }

    /// `theta_j(z; q)` for `j` in `1..=4`.
    pub fn theta(&self, j: u8, z: &R) -> R {
        let (sq, rect) = self.powers();
        let one = z.one_like();
        match j {
            1 | 2 => {
                let mut acc = z.zero_like();
                for n in 0..self.terms {
                    let arg = z.mul_i64(2 * n as i64 + 1);
                    let term = if j == 1 {
                        rect[n].clone() * &arg.sin()
                    } else {
                        rect[n].clone() * &arg.cos()
                    };
                    acc = if j == 1 && n % 2 == 1 { acc - term } else { acc + term };
                }
                acc.mul_i64(2) * &self.q_quarter
            }
            3 | 4 => {
                let mut acc = z.zero_like();
                for n in 1..=self.terms {
                    let term = sq[n].clone() * &z.mul_i64(2 * n as i64).cos();
                    acc = if j == 4 && n % 2 == 1 { acc - term } else { acc + term };
                }
                one + &acc.mul_i64(2)
            }
            _ => panic!("theta index must be 1..=4, got {j}"),
        }
    }

    /// `theta_1'(0) = 2 sum (-1)^n q^((n+1/2)^2) (2n+1)`.
    pub fn theta1_prime0(&self) -> R {
        let (_, rect) = self.powers();
        let mut acc = self.q.zero_like();
        for (n, r) in rect.iter().enumerate().take(self.terms) {
            let term = r.mul_i64(2 * n as i64 + 1);
            acc = if n % 2 == 1 { acc - term } else { acc + term };
        }
        acc.mul_i64(2) * &self.q_quarter
    }
}

/// `(k!)^2 q^(k+1) / (1-q)^(2k+1)`.
pub fn meixner_norm<S: Scalar>(k: u64, q: &S) -> S {
    let f = factorial(q, k);
    let one_minus = q.one_like() - q;
    f.clone() * &f * &powi(q, k as i64 + 1) / powi(&one_minus, 2 * k as i64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::BigFloat;
    use num_rational::BigRational;

    const BITS: u32 = 256;

    fn bf(x: f64) -> BigFloat {
        BigFloat::from_f64(x, BITS)
    }

    fn ctx(gamma: f64) -> ThetaContext<BigFloat> {
        ThetaContext::from_gamma(&bf(gamma)).unwrap()
    }

    fn close(a: &BigFloat, b: &BigFloat, tol: f64) -> bool {
        (a.clone() - b).abs().to_f64() <= tol
    }

    #[test]
    fn nome_at_half_pi_squared_is_inverse_e() {
        let pi = BigFloat::pi(BITS);
        let g = pi.clone() * &pi / bf(2.0);
        let q = nome(&g).unwrap();
        assert!(close(&q, &bf(-1.0).exp(), 1e-70));
    }

    #[test]
    fn nome_increases_towards_one() {
        let mut prev = bf(0.0);
        for g in [0.5, 1.0, 2.0, 8.0, 64.0, 1024.0] {
            let q = nome(&bf(g)).unwrap();
            assert!(q > prev && q < bf(1.0));
            prev = q;
        }
    }

    #[test]
    fn nome_matches_exp() {
        let g = bf(1.2);
        let pi = BigFloat::pi(BITS);
        let expect = (-(pi.clone() * &pi) / (g.clone() * bf(2.0))).exp();
        assert_eq!(nome(&g).unwrap(), expect);
        assert!((nome(&1.2f64).unwrap().ln() + 4.112335167120566).abs() < 1e-12);
    }

    #[test]
    fn underflow_and_large_gamma_guards() {
        assert_eq!(nome(&1e-3f64).unwrap_err(), Error::Underflow);
        assert!(nome(&bf(-1.0)).is_err());
        // q extremely close to one needs too many terms
        let huge = BigFloat::from_f64(1e15, BITS);
        assert!(matches!(
            ThetaContext::from_gamma(&huge),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn small_nome_limits() {
        let c = ThetaContext::new(BigFloat::from_f64(1e-300, BITS)).unwrap();
        let z = bf(0.7);
        assert!(close(&c.theta(3, &z), &bf(1.0), 1e-250));
        assert!(close(&c.theta(4, &z), &bf(1.0), 1e-250));
    }

    #[test]
    fn theta1_vanishes_at_zero() {
        for g in [0.5, 1.2, 3.0] {
            assert!(ctx(g).theta(1, &bf(0.0)).is_zero());
        }
    }

    #[test]
    fn shift_identity() {
        let c = ctx(1.2);
        let half_pi = BigFloat::pi(BITS).ldexp(-1);
        for i in -8..=8 {
            let z = bf(i as f64 * 0.37);
            let lhs = c.theta(3, &z);
            let rhs = c.theta(4, &(z.clone() + &half_pi));
            assert!(close(&lhs, &rhs, 1e-70));
        }
    }

    #[test]
    fn prime_matches_product_identity_and_finite_difference() {
        let c = ctx(1.2);
        let zero = bf(0.0);
        let d = c.theta1_prime0();
        let product = c.theta(2, &zero) * c.theta(3, &zero) * c.theta(4, &zero);
        assert!(close(&d, &product, 1e-70));
        let h = bf(1.0).ldexp(-30);
        let fd = (c.theta(1, &h) - c.theta(1, &-h.clone())) / h.mul_i64(2);
        assert!(close(&fd, &d, 1e-17));
    }

    #[test]
    fn meixner_examples() {
        let q = bf(0.3);
        assert!(close(&meixner_norm(0, &q), &(q.clone() / (bf(1.0) - &q)), 1e-70));
        assert_eq!(meixner_norm(1, &0.5f64), 2.0);
        let q = bf(-1.0).exp();
        let direct = bf(14400.0) * crate::scalar::powi(&q, 6)
            / crate::scalar::powi(&(bf(1.0) - &q), 11);
        assert!(((meixner_norm(5, &q) - &direct) / &direct).abs().to_f64() < 1e-70);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn periodicity_and_parity(g in 0.3f64..3.0, z in -4.0f64..4.0) {
                let c = ctx(g);
                let z = bf(z);
                let pi = BigFloat::pi(BITS);
                let tol = 2f64.powi(-(BITS as i32) / 2);
                let zp = z.clone() + &pi;
                let mz = -z.clone();
                for j in 1..=4u8 {
                    let v = c.theta(j, &z);
                    let sign = if j <= 2 { -1.0 } else { 1.0 };
                    prop_assert!(close(&c.theta(j, &zp), &v.mul_i64(sign as i64), tol));
                    let parity = if j == 1 { -1 } else { 1 };
                    prop_assert!(close(&c.theta(j, &mz), &v.mul_i64(parity), tol));
                }
            }

            #[test]
            fn meixner_exact_in_rationals(k in 0u64..12, n in 1i64..50, extra in 1i64..50) {
                let q = BigRational::new(n.into(), (n + extra).into());
                let h = meixner_norm(k, &q);
                let one_minus = BigRational::from_integer(1.into()) - &q;
                let back = h * powi(&one_minus, 2 * k as i64 + 1) / powi(&q, k as i64 + 1);
                let f = factorial(&q, k);
                prop_assert_eq!(back, f.clone() * f);
            }
        }
    }
}
