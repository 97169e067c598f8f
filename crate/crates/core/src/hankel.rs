//! Hankel determinants, partition functions, moment sequences and
//! orthogonal polynomial norms.
//!
//! The determinant route (derivative towers of `phi` and `psi`) defines
//! `tau_n`. The norm route rebuilds the same numbers from orthogonality
//! weights:
//!
//! | phase | family | weight on `l` | `tau_n / prod h_k` |
//! |-------|--------|---------------|--------------------|
//! | D  | DW | `e^{tx} sinh((pi/2-g)x) / sinh(pi x/2)` on the real line | `1` |
//! | D  | HT | `e^{tx} cosh((pi/2-g)x) / cosh(pi x/2)` on the real line | `1` |
//! | AF | DW | `e^{2tl - 2g|l|}`, `l` in Z | `2^{n^2}` |
//! | AF | HT | `e^{(2l+1)t - |2l+1|g}`, `l` in Z | `2^{n^2}` |
//! | F  | DW | `q^l - qt^l`, `l >= 0` | `2^{n^2}` |
//! | F  | HT | `q^{l+1} + e^{2g} qt^{l+1}`, `l >= 0` | `2^{n^2} e^{n(t-g)}` |
//!
//! with `q = e^{-2(t-g)}` and `qt = e^{-2(t+g)}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{weights_from_params, PhaseParams, PhaseRegion};
use crate::scalar::{factorial, powi, Real, Scalar};
use crate::series::{derivative_tower, Symbol};

pub const N_MAX_DEFAULT: usize = 64;
const MAX_RETRIES: u32 = 3;
const MAX_BRANCH_TERMS: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dw,
    Ht,
}

impl Family {
    pub const BOTH: [Family; 2] = [Family::Dw, Family::Ht];

    pub fn symbol(self) -> Symbol {
        match self {
            Family::Dw => Symbol::Phi,
            Family::Ht => Symbol::Psi,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Dw => "dw",
            Family::Ht => "ht",
        })
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dw" => Ok(Family::Dw),
            "ht" => Ok(Family::Ht),
            other => Err(format!("unknown family {other:?} (expected dw or ht)")),
        }
    }
}

/// Rough number of bits a Hankel determinant of order `n` loses here.
pub fn estimated_loss_bits(n: usize) -> u32 {
    (n * n + 16 * n + 64) as u32
}

/// Working precision that leaves `target` bits after the estimated loss.
pub fn working_bits(target: u32, n: usize) -> u32 {
    let est = estimated_loss_bits(n);
    (target + est).max(2 * est) + 64
}

/// Runs `f` at `bits`, doubling on insufficient precision at most three
/// times.
pub fn with_precision_retry<T>(bits: u32, mut f: impl FnMut(u32) -> Result<T>) -> Result<T> {
    let mut bits = bits;
    let mut attempt = 0;
    loop {
        match f(bits) {
            Err(Error::InsufficientPrecision { .. }) if attempt < MAX_RETRIES => {
                attempt += 1;
                bits *= 2;
            }
            other => return other,
        }
    }
}

fn check_n(n: usize, n_max: usize) -> Result<()> {
    if n > n_max {
        return Err(Error::ResourceLimit {
            what: "Hankel order",
            requested: n as u64,
            limit: n_max as u64,
        });
    }
    Ok(())
}

/// `log2 sqrt(sum x_i^2)`, evaluated in double precision from the logs.
fn log2_norm<S: Scalar>(xs: &[S]) -> f64 {
    let logs: Vec<f64> = xs.iter().map(|x| x.log2_abs()).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    let s: f64 = logs.iter().map(|l| (2.0 * (l - top)).exp2()).sum();
    top + 0.5 * s.log2()
}

/// `det(seq[j+k])` for `0 <= j, k < n` by LU with full pivoting.
///
/// The Hadamard ratio `sum log2 |row| - log2 |det|` bounds the bits lost;
/// exceeding half the working precision is reported as
/// [`Error::InsufficientPrecision`].
pub fn hankel_det<S: Scalar>(seq: &[S], n: usize) -> Result<S> {
    let needed = (2 * n).saturating_sub(1).max(1);
    if seq.len() < needed {
        return Err(Error::SequenceTooShort {
            needed,
            got: seq.len(),
        });
    }
    if n == 0 {
        return Ok(seq[0].one_like());
    }
    let mut a: Vec<Vec<S>> = (0..n).map(|j| seq[j..j + n].to_vec()).collect();
    let hadamard: f64 = a.iter().map(|r| log2_norm(r)).sum();
    let mut det = seq[0].one_like();
    for k in 0..n {
        let (mut pi, mut pj) = (k, k);
        let mut best = a[k][k].abs();
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                let m = x.abs();
                if m > best {
                    best = m;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best.is_zero() {
            return Ok(seq[0].zero_like());
        }
        if pi != k {
            a.swap(pi, k);
            det = -det;
        }
        if pj != k {
            for row in a.iter_mut() {
                row.swap(pj, k);
            }
            det = -det;
        }
        let pivot = a[k][k].clone();
        det = det * &pivot;
        let inv = pivot.one_like() / &pivot;
        let (upper, lower) = a.split_at_mut(k + 1);
        let prow = &upper[k];
        for row in lower.iter_mut() {
            if row[k].is_zero() {
                continue;
            }
            let factor = row[k].clone() * &inv;
            for j in k + 1..n {
                let delta = factor.clone() * &prow[j];
                row[j] = row[j].clone() - delta;
            }
        }
    }
    if let Some(bits) = det.precision_hint() {
        let loss = hadamard - det.log2_abs();
        if loss > bits as f64 / 2.0 {
            return Err(Error::InsufficientPrecision {
                loss_bits: loss,
                working_bits: bits,
            });
        }
    }
    Ok(det)
}

/// `tau_n` of one family by the determinant route, rounded to the
/// precision of `p`.
pub fn tau<R: Real>(p: &PhaseParams<R>, family: Family, n: usize) -> Result<R> {
    check_n(n, N_MAX_DEFAULT)?;
    tau_at(p, family, n, working_bits(p.precision_bits, n))
        .map(|x| x.to_precision(p.precision_bits))
}

fn tau_at<R: Real>(p: &PhaseParams<R>, family: Family, n: usize, bits: u32) -> Result<R> {
    if n == 0 {
        return Ok(p.gamma.one_like().to_precision(bits));
    }
    with_precision_retry(bits, |b| {
        let q = p.at_precision(b);
        let tower = derivative_tower(&q, family.symbol(), 2 * n - 2)?;
        hankel_det(&tower, n)
    })
}

pub fn tau_dw<R: Real>(p: &PhaseParams<R>, n: usize) -> Result<R> {
    tau(p, Family::Dw, n)
}

pub fn tau_ht<R: Real>(p: &PhaseParams<R>, n: usize) -> Result<R> {
    tau(p, Family::Ht, n)
}

/// `prod_{j<n} (j!)^e`.
fn factorial_product<R: Real>(like: &R, n: usize, e: i64) -> R {
    (0..n as u64).fold(like.one_like(), |acc, j| acc * powi(&factorial(like, j), e))
}

/// `Z_2n^HT = (ab)^{2n^2} / prod (j!)^4 * tau_n^DW * tau_n^HT`.
pub fn z_ht<R: Real>(p: &PhaseParams<R>, n: usize) -> Result<R> {
    check_n(n, N_MAX_DEFAULT)?;
    let bits = working_bits(p.precision_bits, n);
    let q = p.at_precision(bits);
    let w = weights_from_params(&q)?;
    let ab = w.a.clone() * &w.b;
    let dw = tau_at(&q, Family::Dw, n, bits)?;
    let ht = tau_at(&q, Family::Ht, n, bits)?;
    let z = powi(&ab, 2 * (n * n) as i64) / factorial_product(&ab, n, 4) * dw * ht;
    Ok(z.to_precision(p.precision_bits))
}

/// `Z_n^DW = (ab)^{n^2} / prod (j!)^2 * tau_n^DW`.
pub fn z_dw<R: Real>(p: &PhaseParams<R>, n: usize) -> Result<R> {
    check_n(n, N_MAX_DEFAULT)?;
    let bits = working_bits(p.precision_bits, n);
    let q = p.at_precision(bits);
    let w = weights_from_params(&q)?;
    let ab = w.a.clone() * &w.b;
    let dw = tau_at(&q, Family::Dw, n, bits)?;
    let z = powi(&ab, (n * n) as i64) / factorial_product(&ab, n, 2) * dw;
    Ok(z.to_precision(p.precision_bits))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence<S> {
    pub phase: PhaseRegion,
    pub family: Family,
    pub t0: S,
    pub moments: Vec<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormSequence<S> {
    pub phase: PhaseRegion,
    pub family: Family,
    pub h: Vec<S>,
}

/// Normalizations of the ferroelectric half-turn weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FerroHtWeight {
    /// `q^l + e^{-2g} qt^l` on `l >= 0`, as written for the orthogonality
    /// relation.
    Literal,
    /// `q^{l+1} + e^{2g} qt^{l+1}` on `l >= 0`: the literal weight times
    /// `q`, normalized so that its norms approach the Meixner norms.
    Normalized,
    /// `q^l + qt^l` on `l >= 1`, read off the even-exponent series for
    /// `psi`.
    EvenSeries,
}

impl FerroHtWeight {
    pub const ALL: [FerroHtWeight; 3] = [
        FerroHtWeight::Literal,
        FerroHtWeight::Normalized,
        FerroHtWeight::EvenSeries,
    ];
}

/// Geometric run `amp * ratio^j` placed at `l = start + step * j`, `j >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch<R> {
    pub start: i64,
    pub step: i64,
    pub amp: R,
    pub ratio: R,
}

/// A weight on the integers written as a sum of geometric branches.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteWeight<R> {
    pub branches: Vec<Branch<R>>,
}

impl<R: Real> DiscreteWeight<R> {
    pub fn eval(&self, l: i64) -> R {
        let mut acc = self.branches[0].amp.zero_like();
        for b in &self.branches {
            let j = (l - b.start) * b.step;
            if j >= 0 {
                acc = acc + b.amp.clone() * &powi(&b.ratio, j);
            }
        }
        acc
    }

    /// Terms kept per branch so that every moment up to `order` has a
    /// truncated tail below `2^-bits` relative to the branch's absolute sum.
    pub fn truncation(&self, order: usize, bits: u32) -> Result<Vec<usize>> {
        let ln2 = std::f64::consts::LN_2;
        let slack = (bits as f64 + 8.0) * ln2 + (self.branches.len() as f64).ln();
        let mut out = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            let la = b.amp.abs().log2_abs() * ln2;
            let lr = b.ratio.log2_abs() * ln2;
            if !(lr < 0.0) {
                return Err(Error::Truncation {
                    what: "discrete moments",
                    reason: format!("branch ratio {} is not below one", b.ratio.to_f64()),
                });
            }
            let r = lr.exp();
            let lrho = ((1.0 + r) / 2.0).ln();
            let tail_factor = -(1.0 - (1.0 + r) / 2.0).ln();
            let mut need = 1usize;
            for m in 0..=order {
                let mut log_sum = f64::NEG_INFINITY;
                let mut j = 0usize;
                loop {
                    if j > MAX_BRANCH_TERMS {
                        return Err(Error::Truncation {
                            what: "discrete moments",
                            reason: format!("more than {MAX_BRANCH_TERMS} terms needed"),
                        });
                    }
                    let l = (b.start + b.step * j as i64).unsigned_abs() as f64;
                    let lt = if l == 0.0 {
                        if m == 0 { la } else { f64::NEG_INFINITY }
                    } else {
                        la + j as f64 * lr + m as f64 * l.ln()
                    };
                    if j > 0 && l >= 1.0 {
                        let monotone = m as f64 * (1.0 / l).ln_1p() + lr <= lrho;
                        if monotone && lt + tail_factor < log_sum - slack {
                            need = need.max(j);
                            break;
                        }
                    }
                    log_sum = logaddexp(log_sum, lt);
                    j += 1;
                }
            }
            out.push(need);
        }
        Ok(out)
    }

    /// `mu_m = sum_l l^m w(l)` for `m = 0..=order`, at the precision of the
    /// branch data.
    pub fn moments(&self, order: usize) -> Result<Vec<R>> {
        let bits = self.branches[0].amp.precision();
        let cut = self.truncation(order, bits)?;
        let zero = self.branches[0].amp.zero_like();
        let mut mu = vec![zero; order + 1];
        for (b, &terms) in self.branches.iter().zip(&cut) {
            let mut base = b.amp.clone();
            for j in 0..terms {
                let l = b.start + b.step * j as i64;
                let mut pw = base.clone();
                for m in 0..=order {
                    mu[m] = mu[m].clone() + &pw;
                    if m < order {
                        pw = pw.mul_i64(l);
                    }
                }
                base = base * &b.ratio;
            }
        }
        Ok(mu)
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Orthogonality weight of a discrete phase. `variant` only matters for the
/// ferroelectric half-turn family.
pub fn discrete_weight<R: Real>(
    p: &PhaseParams<R>,
    family: Family,
    variant: FerroHtWeight,
) -> Result<DiscreteWeight<R>> {
    let (g, t) = (&p.gamma, &p.t);
    let one = g.one_like();
    let branch = |start, step, amp: R, ratio: R| Branch {
        start,
        step,
        amp,
        ratio,
    };
    let branches = match (p.phase, family) {
        (PhaseRegion::Disordered, _) => {
            return Err(Error::ParameterDomain {
                phase: p.phase,
                violated: "discrete weights exist only in the AF and F phases".into(),
            })
        }
        (PhaseRegion::Antiferroelectric, Family::Dw) => vec![
            branch(0, 1, one.clone(), (t.clone() - g).mul_i64(2).exp()),
            branch(
                -1,
                -1,
                (-(t.clone() + g).mul_i64(2)).exp(),
                (-(t.clone() + g).mul_i64(2)).exp(),
            ),
        ],
        (PhaseRegion::Antiferroelectric, Family::Ht) => vec![
            branch(0, 1, (t.clone() - g).exp(), (t.clone() - g).mul_i64(2).exp()),
            branch(
                -1,
                -1,
                (-(t.clone() + g)).exp(),
                (-(t.clone() + g).mul_i64(2)).exp(),
            ),
        ],
        (PhaseRegion::Ferroelectric, fam) => {
            let q = (-(t.clone() - g).mul_i64(2)).exp();
            let qt = (-(t.clone() + g).mul_i64(2)).exp();
            match (fam, variant) {
                (Family::Dw, _) => vec![
                    branch(0, 1, one.clone(), q),
                    branch(0, 1, -one.clone(), qt),
                ],
                (Family::Ht, FerroHtWeight::Literal) => vec![
                    branch(0, 1, one.clone(), q),
                    branch(0, 1, (-g.mul_i64(2)).exp(), qt),
                ],
                (Family::Ht, FerroHtWeight::Normalized) => vec![
                    branch(0, 1, q.clone(), q),
                    branch(0, 1, g.mul_i64(2).exp() * &qt, qt),
                ],
                (Family::Ht, FerroHtWeight::EvenSeries) => vec![
                    branch(1, 1, q.clone(), q),
                    branch(1, 1, qt.clone(), qt),
                ],
            }
        }
    };
    Ok(DiscreteWeight { branches })
}

/// Moments of the orthogonality weight, at the precision of `p`.
///
/// In the disordered phase the moments are the derivative tower of the
/// symbol itself, since `phi` and `psi` are Laplace transforms of the two
/// weights. The ferroelectric half-turn family uses
/// [`FerroHtWeight::Normalized`].
pub fn moments<R: Real>(
    p: &PhaseParams<R>,
    family: Family,
    order: usize,
) -> Result<MomentSequence<R>> {
    moments_with_variant(p, family, order, FerroHtWeight::Normalized)
}

pub fn moments_with_variant<R: Real>(
    p: &PhaseParams<R>,
    family: Family,
    order: usize,
    variant: FerroHtWeight,
) -> Result<MomentSequence<R>> {
    let moments = match p.phase {
        PhaseRegion::Disordered => derivative_tower(p, family.symbol(), order)?,
        _ => discrete_weight(p, family, variant)?.moments(order)?,
    };
    Ok(MomentSequence {
        phase: p.phase,
        family,
        t0: p.t.clone(),
        moments,
    })
}

/// `h_k = Delta_{k+1} / Delta_k` for `k = 0..=kmax`, read off as the
/// pivots of unpivoted Gaussian elimination on the Hankel matrix.
pub fn norms_from_moments<S: Scalar>(
    ms: &MomentSequence<S>,
    kmax: usize,
) -> Result<NormSequence<S>> {
    let mu = &ms.moments;
    let n = kmax + 1;
    if mu.len() < 2 * kmax + 1 {
        return Err(Error::SequenceTooShort {
            needed: 2 * kmax + 1,
            got: mu.len(),
        });
    }
    let mut a: Vec<Vec<S>> = (0..n).map(|j| mu[j..j + n].to_vec()).collect();
    let mut h = Vec::with_capacity(n);
    let mut loss = 0.0f64;
    for k in 0..n {
        let pivot = a[k][k].clone();
        if !pivot.is_positive() {
            return Err(Error::MomentSequenceInvalid {
                k,
                reason: format!("Hankel pivot is not positive ({:?})", pivot),
            });
        }
        loss = loss.max(mu[2 * k].log2_abs() - pivot.log2_abs() + (k as f64 + 1.0).log2() * k as f64);
        if let Some(bits) = pivot.precision_hint() {
            if loss > bits as f64 / 2.0 {
                return Err(Error::InsufficientPrecision {
                    loss_bits: loss,
                    working_bits: bits,
                });
            }
        }
        let inv = pivot.one_like() / &pivot;
        let (upper, lower) = a.split_at_mut(k + 1);
        let prow = &upper[k];
        for row in lower.iter_mut() {
            let factor = row[k].clone() * &inv;
            for j in k + 1..n {
                let delta = factor.clone() * &prow[j];
                row[j] = row[j].clone() - delta;
            }
        }
        h.push(pivot);
    }
    Ok(NormSequence {
        phase: ms.phase,
        family: ms.family,
        h,
    })
}

/// Norms `h_0..=h_kmax` with automatic working precision, rounded to the
/// precision of `p`.
pub fn norms<R: Real>(p: &PhaseParams<R>, family: Family, kmax: usize) -> Result<NormSequence<R>> {
    norms_with_variant(p, family, kmax, FerroHtWeight::Normalized)
}

pub fn norms_with_variant<R: Real>(
    p: &PhaseParams<R>,
    family: Family,
    kmax: usize,
    variant: FerroHtWeight,
) -> Result<NormSequence<R>> {
    check_n(kmax, 2 * N_MAX_DEFAULT)?;
    let mut ns = norms_at(p, family, kmax, variant, working_bits(p.precision_bits, kmax + 1))?;
    for x in ns.h.iter_mut() {
        *x = x.to_precision(p.precision_bits);
    }
    Ok(ns)
}

fn norms_at<R: Real>(
    p: &PhaseParams<R>,
    family: Family,
    kmax: usize,
    variant: FerroHtWeight,
    bits: u32,
) -> Result<NormSequence<R>> {
    with_precision_retry(bits, |b| {
        let q = p.at_precision(b);
        let ms = moments_with_variant(&q, family, 2 * kmax, variant)?;
        norms_from_moments(&ms, kmax)
    })
}

/// `tau_n / prod_{k<n} h_k` for the weights used by [`norms`].
pub fn norm_prefactor<R: Real>(p: &PhaseParams<R>, family: Family, n: usize) -> R {
    let one = p.gamma.one_like();
    match (p.phase, family) {
        (PhaseRegion::Disordered, _) => one,
        (PhaseRegion::Antiferroelectric, _) | (PhaseRegion::Ferroelectric, Family::Dw) => {
            one.ldexp((n * n) as i32)
        }
        (PhaseRegion::Ferroelectric, Family::Ht) => {
            one.ldexp((n * n) as i32) * &(p.t.clone() - &p.gamma).mul_i64(n as i64).exp()
        }
    }
}

/// `tau_{k+1} / tau_k` for every `k` of a norm sequence: the norms in the
/// normalization of the Hankel determinants themselves.
pub fn tau_ratios<R: Real>(p: &PhaseParams<R>, ns: &NormSequence<R>) -> Vec<R> {
    ns.h.iter()
        .enumerate()
        .map(|(k, h)| {
            h.clone() * &norm_prefactor(p, ns.family, k + 1) / norm_prefactor(p, ns.family, k)
        })
        .collect()
}

/// `Z_2n^HT` assembled from the two norm families.
pub fn z_ht_via_norms<R: Real>(p: &PhaseParams<R>, n: usize) -> Result<R> {
    check_n(n, N_MAX_DEFAULT)?;
    if n == 0 {
        return Ok(p.gamma.one_like());
    }
    let bits = working_bits(p.precision_bits, n);
    let q = p.at_precision(bits);
    let w = weights_from_params(&q)?;
    let ab = w.a.clone() * &w.b;
    let mut z = powi(&ab, 2 * (n * n) as i64) / factorial_product(&ab, n, 4);
    for family in Family::BOTH {
        let ns = norms_at(&q, family, n - 1, FerroHtWeight::Normalized, bits)?;
        z = z * norm_prefactor(&q, family, n);
        for h in &ns.h {
            z = z * h;
        }
    }
    Ok(z.to_precision(p.precision_bits))
}

/// Outcome of fitting `tau_n / prod h_k = A^{n^2} lambda^n` for one
/// candidate ferroelectric half-turn weight.
#[derive(Clone, Debug)]
pub struct FerroCalibration<R> {
    pub variant: FerroHtWeight,
    /// Ratios `tau_n / prod h_k` for `n = 1..=4`.
    pub ratios: Vec<R>,
    pub base: R,
    pub lambda: R,
    /// Largest relative misfit of the two-parameter law at `n = 3, 4`.
    pub misfit: f64,
    pub consistent: bool,
    /// `lambda` divided by `e^{t-g}`.
    pub lambda_over_exp: R,
}

/// Determines the constant relating `tau_n^HT` to the product of
/// half-turn norms from `n = 1, 2`, then checks it at `n = 3, 4`.
pub fn calibrate_ferro_ht<R: Real>(
    p: &PhaseParams<R>,
    variant: FerroHtWeight,
) -> Result<FerroCalibration<R>> {
    if p.phase != PhaseRegion::Ferroelectric {
        return Err(Error::ParameterDomain {
            phase: p.phase,
            violated: "calibration applies to the ferroelectric phase".into(),
        });
    }
    let nmax = 4;
    let bits = working_bits(p.precision_bits, nmax);
    let q = p.at_precision(bits);
    let ns = norms_at(&q, Family::Ht, nmax - 1, variant, bits)?;
    let mut ratios = Vec::with_capacity(nmax);
    let mut prod = q.gamma.one_like();
    for n in 1..=nmax {
        prod = prod * &ns.h[n - 1];
        ratios.push(tau_at(&q, Family::Ht, n, bits)? / &prod);
    }
    let base = (ratios[1].clone() / (ratios[0].clone() * &ratios[0])).sqrt();
    let lambda = ratios[0].clone() / &base;
    let mut misfit = 0.0f64;
    for n in 3..=nmax {
        let pred = powi(&base, (n * n) as i64) * powi(&lambda, n as i64);
        let dev = ((pred / &ratios[n - 1]) - base.one_like()).abs().to_f64();
        misfit = misfit.max(dev);
    }
    let tol = 2f64.powi(-(p.precision_bits as i32) / 2);
    let lambda_over_exp = lambda.clone() / (q.t.clone() - &q.gamma).exp();
    let round = |x: R| x.to_precision(p.precision_bits);
    Ok(FerroCalibration {
        variant,
        ratios: ratios.into_iter().map(round).collect(),
        base: round(base),
        lambda: round(lambda),
        misfit,
        consistent: misfit <= tol,
        lambda_over_exp: round(lambda_over_exp),
    })
}

/// One row of the `(n, tau_dw, tau_ht, Z)` table; numbers as decimal strings.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TauRow {
    pub n: usize,
    pub tau_dw: String,
    pub tau_ht: String,
    pub z_ht: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NormRow {
    pub k: usize,
    pub h: String,
}

pub fn tau_table<R: Real>(p: &PhaseParams<R>, ns: &[usize]) -> Result<Vec<TauRow>> {
    ns.iter()
        .map(|&n| {
            Ok(TauRow {
                n,
                tau_dw: tau(p, Family::Dw, n)?.to_decimal(),
                tau_ht: tau(p, Family::Ht, n)?.to_decimal(),
                z_ht: z_ht(p, n)?.to_decimal(),
            })
        })
        .collect()
}

pub fn norm_table<R: Real>(ns: &NormSequence<R>) -> Vec<NormRow> {
    ns.h
        .iter()
        .enumerate()
        .map(|(k, h)| NormRow {
            k,
            h: h.to_decimal(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::BigFloat;
    use crate::enumerator::{partition_dwbc, partition_ht};
    use crate::model::parse_real;
    use crate::scalar::rational_to_real;
    use num_rational::BigRational;

    fn bf(x: f64, bits: u32) -> BigFloat {
        BigFloat::from_f64(x, bits)
    }

    fn rel(x: &BigFloat, y: &BigFloat) -> f64 {
        ((x.clone() - y).abs() / y.abs()).to_f64()
    }

    fn params(phase: PhaseRegion, g: f64, t: f64, bits: u32) -> PhaseParams<BigFloat> {
        PhaseParams::new(phase, bf(g, bits), bf(t, bits), bits).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Cofactor expansion along the first row, exact.
    fn cofactor_det(m: &[Vec<BigRational>]) -> BigRational {
        let n = m.len();
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = q(0, 1);
        for (c, x) in m[0].iter().enumerate() {
            let minor: Vec<Vec<BigRational>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| v.clone()).collect())
                .collect();
            let term = x * cofactor_det(&minor);
            acc = if c % 2 == 0 { acc + term } else { acc - term };
        }
        acc
    }

    #[test]
    fn small_determinants() {
        assert_eq!(hankel_det(&[q(7, 3)], 1).unwrap(), q(7, 3));
        assert_eq!(hankel_det(&[q(1, 1), q(2, 1), q(5, 1)], 2).unwrap(), q(1, 1));
        assert!((hankel_det(&[1.0, 2.0, 5.0], 2).unwrap() - 1.0).abs() < 1e-15);
        let hilbert: Vec<BigRational> = (0..5).map(|m| q(1, m + 1)).collect();
        let exact = hankel_det(&hilbert, 3).unwrap();
        let m: Vec<Vec<BigRational>> = (0..3).map(|i| hilbert[i..i + 3].to_vec()).collect();
        assert_eq!(exact, cofactor_det(&m));
        assert_eq!(exact, q(1, 2160));
        let floats: Vec<BigFloat> = hilbert.iter().map(|x| rational_to_real(x, &bf(0.0, 256))).collect();
        assert!(rel(&hankel_det(&floats, 3).unwrap(), &rational_to_real(&q(1, 2160), &floats[0])) < 1e-60);
        assert!(matches!(
            hankel_det(&[1.0, 2.0], 2),
            Err(Error::SequenceTooShort { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn ill_conditioned_determinant_requests_more_precision() {
        let hilbert: Vec<f64> = (0..29).map(|m| 1.0 / (m as f64 + 1.0)).collect();
        assert!(matches!(
            hankel_det(&hilbert, 15),
            Err(Error::InsufficientPrecision { .. })
        ));
    }

    #[test]
    fn first_order_taus_are_the_symbols() {
        for (phase, g, t) in [
            (PhaseRegion::Disordered, 0.6, 0.1),
            (PhaseRegion::Antiferroelectric, 1.2, 0.3),
            (PhaseRegion::Ferroelectric, 0.5, 1.0),
        ] {
            let p = params(phase, g, t, 256);
            let w = weights_from_params(&p).unwrap();
            let phi = w.c.clone() / (w.a.clone() * &w.b);
            let psi = bf(1.0, 256) / &w.a + &(bf(1.0, 256) / &w.b);
            assert!(rel(&tau_dw(&p, 1).unwrap(), &phi) < 1e-70);
            assert!(rel(&tau_ht(&p, 1).unwrap(), &psi) < 1e-70);
            let zc = w.c.clone() * (w.a.clone() + &w.b);
            assert!(rel(&z_ht(&p, 1).unwrap(), &zc) < 1e-70);
            assert!(rel(&z_ht_via_norms(&p, 1).unwrap(), &zc) < 1e-70);
            assert!(rel(&z_dw(&p, 1).unwrap(), &w.c) < 1e-70);
        }
    }

    #[test]
    fn isotropic_point_gives_three_halves() {
        let p = PhaseParams::new(
            PhaseRegion::Disordered,
            parse_real("pi/3", 256).unwrap(),
            bf(0.0, 256),
            256,
        )
        .unwrap();
        assert!(rel(&z_ht(&p, 1).unwrap(), &bf(1.5, 256)) < 1e-70);
        // second order determinant of psi with psi'(0) = 0
        let tower = derivative_tower(&p, Symbol::Psi, 2).unwrap();
        let expect = tower[0].clone() * &tower[2];
        assert!(rel(&tau_ht(&p, 2).unwrap(), &expect) < 1e-70);
    }

    #[test]
    fn determinant_route_matches_enumeration() {
        for (phase, g, t) in [
            (PhaseRegion::Disordered, 0.7, -0.2),
            (PhaseRegion::Antiferroelectric, 1.2, 0.3),
            (PhaseRegion::Ferroelectric, 0.5, 1.0),
        ] {
            let p = params(phase, g, t, 256);
            let w = weights_from_params(&p).unwrap();
            let abc = w.dwbc_weights();
            for n in 1..=3 {
                let enumerated = partition_dwbc(n, &abc).unwrap();
                assert!(rel(&z_dw(&p, n).unwrap(), &enumerated) < 1e-60, "{phase} n={n}");
            }
            let enumerated = partition_ht(4, &w.w).unwrap();
            assert!(rel(&z_ht(&p, 2).unwrap(), &enumerated) < 1e-60, "{phase}");
        }
    }

    #[test]
    fn oversized_order_is_rejected() {
        let p = params(PhaseRegion::Disordered, 0.7, 0.1, 64);
        assert!(matches!(z_ht(&p, 65), Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn disordered_odd_moments_vanish_at_zero() {
        let p = params(PhaseRegion::Disordered, 0.6, 0.0, 256);
        let ms = moments(&p, Family::Ht, 9).unwrap();
        for m in (1..=9).step_by(2) {
            assert!(ms.moments[m].abs().to_f64() < 1e-60);
        }
        let ns = norms(&p, Family::Ht, 0).unwrap();
        assert!(rel(&ns.h[0], &ms.moments[0]) < 1e-70);
    }

    #[test]
    fn ferroelectric_literal_zeroth_moment() {
        let p = params(PhaseRegion::Ferroelectric, 0.5, 1.0, 256);
        let ms = moments_with_variant(&p, Family::Ht, 0, FerroHtWeight::Literal).unwrap();
        let one = bf(1.0, 256);
        let qq = bf(-1.0, 256).exp();
        let qt = bf(-3.0, 256).exp();
        let expect = one.clone() / (one.clone() - &qq) + &(bf(-1.0, 256).exp() / (one - &qt));
        assert!(rel(&ms.moments[0], &expect) < 1e-70);
    }

    #[test]
    fn discrete_moments_match_brute_force_sums() {
        let p = params(PhaseRegion::Antiferroelectric, 1.2, 0.3, 256);
        for family in Family::BOTH {
            let w = discrete_weight(&p, family, FerroHtWeight::Normalized).unwrap();
            let mu = w.moments(6).unwrap();
            let (g, t) = (&p.gamma, &p.t);
            let mut brute = vec![bf(0.0, 256); 7];
            for l in -400i64..=400 {
                let x = match family {
                    Family::Dw => (t.mul_i64(2 * l) - g.mul_i64(2 * l.abs())).exp(),
                    Family::Ht => (t.mul_i64(2 * l + 1) - g.mul_i64((2 * l + 1).abs())).exp(),
                };
                assert!(rel(&w.eval(l), &x) < 1e-70);
                let mut pw = x;
                for b in brute.iter_mut() {
                    *b = b.clone() + &pw;
                    pw = pw.mul_i64(l);
                }
            }
            for m in 0..=6 {
                assert!(
                    (mu[m].clone() - &brute[m]).abs().to_f64() <= 1e-70 * brute[0].to_f64(),
                    "{family} m={m}"
                );
            }
        }
    }

    #[test]
    fn point_mass_is_rejected() {
        let ms = MomentSequence {
            phase: PhaseRegion::Disordered,
            family: Family::Dw,
            t0: q(0, 1),
            moments: (0..5).map(|m| q(1, 1 << m)).collect(),
        };
        let err = norms_from_moments(&ms, 2).unwrap_err();
        assert!(matches!(err, Error::MomentSequenceInvalid { k: 1, .. }));
    }

    #[test]
    fn antiferroelectric_tau_ht_from_norms() {
        let p = params(PhaseRegion::Antiferroelectric, 1.2, 0.3, 256);
        let ns = norms(&p, Family::Ht, 2).unwrap();
        let prod = ns.h.iter().fold(bf(8.0 * 8.0 * 8.0, 256), |acc, h| acc * h);
        assert!(rel(&tau_ht(&p, 3).unwrap(), &prod) < 1e-60);
    }

    #[test]
    fn cross_route_agreement() {
        for (phase, g, t) in [
            (PhaseRegion::Disordered, 0.6, 0.1),
            (PhaseRegion::Antiferroelectric, 1.2, 0.3),
            (PhaseRegion::Ferroelectric, 0.5, 1.0),
        ] {
            let p = params(phase, g, t, 512);
            let a = z_ht(&p, 4).unwrap();
            let b = z_ht_via_norms(&p, 4).unwrap();
            assert!(rel(&a, &b) < 2f64.powi(-256), "{phase}: {:e}", rel(&a, &b));
        }
    }

    #[test]
    fn ferroelectric_calibration_identifies_the_weights() {
        let p = params(PhaseRegion::Ferroelectric, 0.5, 1.0, 256);
        let lit = calibrate_ferro_ht(&p, FerroHtWeight::Literal).unwrap();
        assert!(lit.consistent);
        assert!(rel(&lit.base, &bf(2.0, 256)) < 1e-60);
        // literal weight: lambda = e^{-(t-g)}
        let e = (p.t.clone() - &p.gamma).exp();
        assert!(rel(&lit.lambda, &(bf(1.0, 256) / &e)) < 1e-60);
        let norm = calibrate_ferro_ht(&p, FerroHtWeight::Normalized).unwrap();
        assert!(norm.consistent);
        assert!(rel(&norm.base, &bf(2.0, 256)) < 1e-60);
        assert!(rel(&norm.lambda, &e) < 1e-60);
        let even = calibrate_ferro_ht(&p, FerroHtWeight::EvenSeries).unwrap();
        assert!(!even.consistent);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(8))]

            #[test]
            fn z_is_even_in_t(g in 0.3f64..1.4, z in 0.05f64..0.9, n in 1usize..4) {
                for phase in [PhaseRegion::Disordered, PhaseRegion::Antiferroelectric] {
                    let plus = params(phase, g, g * z, 256);
                    let minus = params(phase, g, -g * z, 256);
                    let a = z_ht(&plus, n).unwrap();
                    let b = z_ht(&minus, n).unwrap();
                    prop_assert!(rel(&a, &b) < 2f64.powi(-128));
                }
            }

            #[test]
            fn norms_positive_and_toda_ratio_positive(g in 0.3f64..1.4, z in -0.9f64..0.9) {
                for phase in [PhaseRegion::Disordered, PhaseRegion::Antiferroelectric] {
                    let p = params(phase, g, g * z, 256);
                    for family in Family::BOTH {
                        let ns = norms(&p, family, 6).unwrap();
                        prop_assert!(ns.h.iter().all(|h| h.is_positive()));
                        let t: Vec<BigFloat> = (0..=3).map(|n| tau(&p, family, n).unwrap()).collect();
                        for n in 1..3 {
                            prop_assert!((t[n + 1].clone() * &t[n - 1] / (t[n].clone() * &t[n])).is_positive());
                        }
                    }
                }
            }
        }
    }
}
