//! Truncated Taylor series and the derivative towers of the two symbols
//! `phi = c/(ab)` and `psi = 1/a + 1/b`.

use std::ops::{Add, Mul};

use crate::error::{Error, Result};
use crate::model::{PhaseParams, PhaseRegion};
use crate::scalar::{Real, Scalar};

/// Coefficients `f_m = f^(m)(t0) / m!` for `m = 0..=order`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<S> {
    pub t0: S,
    pub coeffs: Vec<S>,
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn new(t0: S, coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        TruncatedSeries { t0, coeffs }
    }

    pub fn constant(t0: S, value: S, order: usize) -> Self {
        let mut coeffs = vec![value.zero_like(); order + 1];
        coeffs[0] = value;
        TruncatedSeries { t0, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::SeriesMismatch("orders differ"));
        }
        if self.t0 != other.t0 {
            return Err(Error::SeriesMismatch("centers differ"));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.clone() + b)
            .collect();
        Ok(TruncatedSeries::new(self.t0.clone(), coeffs))
    }

    /// Cauchy product truncated at the common order.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = self.order();
        let coeffs = (0..=m)
            .map(|k| {
                (0..=k).fold(self.coeffs[0].zero_like(), |acc, j| {
                    acc + self.coeffs[j].clone() * &other.coeffs[k - j]
                })
            })
            .collect();
        Ok(TruncatedSeries::new(self.t0.clone(), coeffs))
    }

    pub fn scale(&self, s: &S) -> Self {
        TruncatedSeries::new(
            self.t0.clone(),
            self.coeffs.iter().map(|c| c.clone() * s).collect(),
        )
    }

    /// `1/f` from `g_m = -(1/f_0) sum_{j=1..m} f_j g_{m-j}`.
    pub fn reciprocal(&self) -> Result<Self> {
        let f0 = &self.coeffs[0];
        if f0.is_negligible() {
            return Err(Error::NearSingularSymbol);
        }
        let inv = f0.one_like() / f0;
        let mut g: Vec<S> = Vec::with_capacity(self.coeffs.len());
        g.push(inv.clone());
        for m in 1..=self.order() {
            let s = (1..=m).fold(inv.zero_like(), |acc, j| {
                acc + self.coeffs[j].clone() * &g[m - j]
            });
            g.push(-(s * &inv));
        }
        Ok(TruncatedSeries::new(self.t0.clone(), g))
    }

    /// Derivatives `m! f_m`.
    pub fn derivatives(&self) -> Vec<S> {
        let mut fact = self.coeffs[0].one_like();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| {
                if m > 1 {
                    fact = fact.mul_i64(m as i64);
                }
                c.clone() * &fact
            })
            .collect()
    }
}

impl<S: Scalar> Add for &TruncatedSeries<S> {
    type Output = TruncatedSeries<S>;
    fn add(self, rhs: Self) -> TruncatedSeries<S> {
        self.try_add(rhs).expect("incompatible series")
    }
}

impl<S: Scalar> Mul for &TruncatedSeries<S> {
    type Output = TruncatedSeries<S>;
    fn mul(self, rhs: Self) -> TruncatedSeries<S> {
        self.try_mul(rhs).expect("incompatible series")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Sin,
    Sinh,
}

/// Expansion of `x -> kind(shift + sign * x)` about `x = t0`.
pub fn elementary_series<R: Real>(
    kind: Elementary,
    shift: &R,
    sign: i64,
    t0: &R,
    order: usize,
) -> TruncatedSeries<R> {
    assert!(sign == 1 || sign == -1);
    let u = shift.clone() + &t0.mul_i64(sign);
    let (s, c) = match kind {
        Elementary::Sin => (u.sin(), u.cos()),
        Elementary::Sinh => (u.sinh(), u.cosh()),
    };
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut inv_fact = u.one_like();
    for m in 0..=order {
        if m > 0 {
            inv_fact = inv_fact / u.from_i64_like(m as i64);
        }
        // m-th derivative of kind at u
        let d = match (kind, m % 4) {
            (Elementary::Sinh, r) if r % 2 == 0 => s.clone(),
            (Elementary::Sinh, _) => c.clone(),
            (Elementary::Sin, 0) => s.clone(),
            (Elementary::Sin, 1) => c.clone(),
            (Elementary::Sin, 2) => -s.clone(),
            (Elementary::Sin, _) => -c.clone(),
        };
        let term = d * &inv_fact;
        coeffs.push(if sign < 0 && m % 2 == 1 { -term } else { term });
    }
    TruncatedSeries::new(t0.clone(), coeffs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Symbol {
    /// `c / (ab)`, generating the domain wall determinant.
    Phi,
    /// `1/a + 1/b`, generating the half-turn determinant.
    Psi,
}

/// Guard bits used for a tower of order `m`.
pub fn tower_guard_bits(order: usize) -> u32 {
    let m = order as f64;
    (4.0 * m * (m + 2.0).log2()).ceil() as u32
}

/// Series of `a(t)`, `b(t)` about `p.t` and the constant `c`.
pub fn weight_series<R: Real>(
    p: &PhaseParams<R>,
    order: usize,
) -> (TruncatedSeries<R>, TruncatedSeries<R>, R) {
    let g = &p.gamma;
    let t = &p.t;
    let two_g = g.clone() + g;
    match p.phase {
        PhaseRegion::Ferroelectric => (
            elementary_series(Elementary::Sinh, &-g.clone(), 1, t, order),
            elementary_series(Elementary::Sinh, g, 1, t, order),
            two_g.sinh(),
        ),
        PhaseRegion::Antiferroelectric => (
            elementary_series(Elementary::Sinh, g, -1, t, order),
            elementary_series(Elementary::Sinh, g, 1, t, order),
            two_g.sinh(),
        ),
        PhaseRegion::Disordered => (
            elementary_series(Elementary::Sin, g, -1, t, order),
            elementary_series(Elementary::Sin, g, 1, t, order),
            two_g.sin(),
        ),
    }
}

/// Taylor series of a symbol about `p.t`, at the precision of `p`.
pub fn symbol_series<R: Real>(
    p: &PhaseParams<R>,
    symbol: Symbol,
    order: usize,
) -> Result<TruncatedSeries<R>> {
    let (a, b, c) = weight_series(p, order);
    match symbol {
        Symbol::Phi => Ok(a.try_mul(&b)?.reciprocal()?.scale(&c)),
        Symbol::Psi => a.reciprocal()?.try_add(&b.reciprocal()?),
    }
}

/// `f(t), f'(t), ..., f^(M)(t)` for `f` one of the two symbols.
///
/// Evaluated with `ceil(4 M log2(M+2))` guard bits and rounded back to the
/// precision of `p`.
pub fn derivative_tower<R: Real>(
    p: &PhaseParams<R>,
    symbol: Symbol,
    order: usize,
) -> Result<Vec<R>> {
    let bits = p.precision_bits;
    let guarded = p.at_precision(bits + tower_guard_bits(order));
    let series = symbol_series(&guarded, symbol, order)?;
    Ok(series
        .derivatives()
        .into_iter()
        .map(|x| x.to_precision(bits))
        .collect())
}

pub fn derivative_tower_phi<R: Real>(p: &PhaseParams<R>, order: usize) -> Result<Vec<R>> {
    derivative_tower(p, Symbol::Phi, order)
}

pub fn derivative_tower_psi<R: Real>(p: &PhaseParams<R>, order: usize) -> Result<Vec<R>> {
    derivative_tower(p, Symbol::Psi, order)
}

/// Direct evaluation of a symbol at `t`, used by finite-difference checks.
pub fn eval_symbol<R: Real>(phase: PhaseRegion, gamma: &R, t: &R, symbol: Symbol) -> R {
    let two_g = gamma.clone() + gamma;
    let (a, b, c) = match phase {
        PhaseRegion::Ferroelectric => (
            (t.clone() - gamma).sinh(),
            (t.clone() + gamma).sinh(),
            two_g.sinh(),
        ),
        PhaseRegion::Antiferroelectric => (
            (gamma.clone() - t).sinh(),
            (gamma.clone() + t).sinh(),
            two_g.sinh(),
        ),
        PhaseRegion::Disordered => (
            (gamma.clone() - t).sin(),
            (gamma.clone() + t).sin(),
            two_g.sin(),
        ),
    };
    match symbol {
        Symbol::Phi => c / (a * b),
        Symbol::Psi => a.one_like() / a + &(b.one_like() / b),
    }
}
