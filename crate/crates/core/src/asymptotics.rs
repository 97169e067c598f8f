//! Closed-form large-n predictions and the fits that compare them with
//! finite-n data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::{tau_ratios, Family, NormSequence};
use crate::model::{weights_from_params, PhaseParams, PhaseRegion};
use crate::scalar::{factorial, powi, Real};
use crate::special::{meixner_norm, ThetaContext};

pub const MIN_FIT_POINTS: usize = 20;

/// Leading-order data of the three theorems. Constants the theory leaves
/// unspecified are `None`.
#[derive(Clone, Debug)]
pub struct AsymptoticPrediction<R> {
    pub phase: PhaseRegion,
    /// Growth base of `F^{2n^2}`.
    pub f: R,
    /// Per-step base of the norms, `h_k / (k!)^2 ~ G^{2k+1}`; in the
    /// ferroelectric phase the `G` of `G^{2n}`.
    pub g: R,
    pub kappa: Option<R>,
    pub kappa_dw: Option<R>,
    pub kappa_ht: Option<R>,
    pub omega: Option<R>,
    pub theta3_n: Option<R>,
    pub theta4_n: Option<R>,
    pub c: Option<R>,
    /// Leading term with the unknown constant set to one where the theory
    /// does not give it.
    pub leading: Option<R>,
    pub n: Option<usize>,
}

/// `kappa^DW = 1/12 - 2g^2/(3pi(pi-2g))`.
pub fn kappa_dw<R: Real>(gamma: &R) -> R {
    gamma.from_ratio_like(1, 12) - kappa_core(gamma).mul_i64(2)
}

/// `kappa^HT = 1/12 + g^2/(3pi(pi-2g))`.
pub fn kappa_ht<R: Real>(gamma: &R) -> R {
    gamma.from_ratio_like(1, 12) + &kappa_core(gamma)
}

/// `kappa = 1/6 - g^2/(3pi(pi-2g))`.
pub fn kappa_total<R: Real>(gamma: &R) -> R {
    gamma.from_ratio_like(1, 6) - kappa_core(gamma)
}

fn kappa_core<R: Real>(gamma: &R) -> R {
    let pi = gamma.pi_like();
    gamma.clone() * gamma / (pi.mul_i64(3) * (pi.clone() - gamma.mul_i64(2)))
}

/// Oscillation frequency of the disordered-phase corrections,
/// `-pi(1 + zeta)`, and of the antiferroelectric theta factors,
/// `pi/2 (1 + zeta)`.
pub fn omega<R: Real>(p: &PhaseParams<R>) -> R {
    let pi = p.gamma.pi_like();
    let one_zeta = p.gamma.one_like() + &p.zeta();
    match p.phase {
        PhaseRegion::Disordered => -(pi * one_zeta),
        _ => pi.ldexp(-1) * one_zeta,
    }
}

/// Window length for averaging out `cos(k omega)`: the nearest integer to
/// `2 pi / |omega mod 2 pi|`, clamped to `[4, 16]`.
pub fn window_length(omega: f64) -> usize {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = omega.rem_euclid(two_pi);
    let d = r.min(two_pi - r);
    if d < 1e-12 {
        return 16;
    }
    ((two_pi / d).round() as usize).clamp(4, 16)
}

/// Per-step base `G` of the norms.
pub fn norm_base<R: Real>(p: &PhaseParams<R>) -> Result<R> {
    let pi = p.gamma.pi_like();
    match p.phase {
        PhaseRegion::Disordered => {
            let c = (pi.clone() * &p.zeta()).ldexp(-1).cos();
            if !c.is_positive() {
                return Err(Error::ParameterDomain {
                    phase: p.phase,
                    violated: "cos(pi t / (2 gamma)) > 0".into(),
                });
            }
            Ok(pi / (p.gamma.mul_i64(2) * c))
        }
        PhaseRegion::Antiferroelectric => {
            let ctx = ThetaContext::from_gamma(&p.gamma)?;
            let w = omega(p);
            Ok(pi * ctx.theta1_prime0() / (p.gamma.mul_i64(2) * ctx.theta(1, &w)))
        }
        PhaseRegion::Ferroelectric => Ok((p.gamma.clone() - &p.t).exp()),
    }
}

pub fn predict_leading<R: Real>(p: &PhaseParams<R>, n: Option<usize>) -> Result<AsymptoticPrediction<R>> {
    let w = weights_from_params(p)?;
    let ab = w.a.clone() * &w.b;
    let g = norm_base(p)?;
    let mut out = AsymptoticPrediction {
        phase: p.phase,
        f: ab.clone(),
        g: g.clone(),
        kappa: None,
        kappa_dw: None,
        kappa_ht: None,
        omega: None,
        theta3_n: None,
        theta4_n: None,
        c: None,
        leading: None,
        n,
    };
    let lead_power = |f: &R, n: usize| powi(f, 2 * (n * n) as i64);
    match p.phase {
        PhaseRegion::Disordered => {
            out.f = ab * &g;
            let kappa = kappa_total(&p.gamma);
            if let Some(n) = n {
                let nk = p.gamma.from_i64_like(n as i64).powf(&kappa);
                out.leading = Some(nk * lead_power(&out.f, n));
            }
            out.kappa = Some(kappa);
            out.kappa_dw = Some(kappa_dw(&p.gamma));
            out.kappa_ht = Some(kappa_ht(&p.gamma));
            out.omega = Some(omega(p));
        }
        PhaseRegion::Antiferroelectric => {
            out.f = ab.mul_i64(2) * &g;
            let om = omega(p);
            if let Some(n) = n {
                let ctx = ThetaContext::from_gamma(&p.gamma)?;
                let z = om.mul_i64(n as i64);
                let t3 = ctx.theta(3, &z);
                let t4 = ctx.theta(4, &z);
                out.leading = Some(t3.clone() * &t4 * lead_power(&out.f, n));
                out.theta3_n = Some(t3);
                out.theta4_n = Some(t4);
            }
            out.omega = Some(om);
        }
        PhaseRegion::Ferroelectric => {
            out.f = (p.t.clone() + &p.gamma).sinh();
            let one = p.gamma.one_like();
            let e = (-p.gamma.mul_i64(4)).exp();
            let c = (one.clone() + &e) * (one - e);
            if let Some(n) = n {
                out.leading = Some(c.clone() * powi(&g, 2 * n as i64) * lead_power(&out.f, n));
            }
            out.c = Some(c);
        }
    }
    Ok(out)
}

/// Deterministic part of the predicted `h_k`.
pub fn predict_hk<R: Real>(p: &PhaseParams<R>, family: Family, k: usize) -> Result<R> {
    let fact = factorial(&p.gamma, k as u64);
    let f2 = fact.clone() * &fact;
    match p.phase {
        PhaseRegion::Disordered => {
            if k == 0 {
                return Err(Error::InsufficientData { needed: 1, got: 0 });
            }
            let g = norm_base(p)?;
            let kappa = match family {
                Family::Dw => kappa_dw(&p.gamma),
                Family::Ht => kappa_ht(&p.gamma),
            };
            let corr = p.gamma.one_like() + &(kappa / p.gamma.from_i64_like(k as i64));
            Ok(f2 * powi(&g, 2 * k as i64 + 1) * corr)
        }
        PhaseRegion::Antiferroelectric => {
            let g = norm_base(p)?;
            Ok(f2 * powi(&g, 2 * k as i64 + 1) * theta_ratio(p, family, k)?)
        }
        PhaseRegion::Ferroelectric => Ok(meixner_norm(k as u64, &meixner_q(p))),
    }
}

/// `q = e^{-2(t-g)}`.
pub fn meixner_q<R: Real>(p: &PhaseParams<R>) -> R {
    (-(p.t.clone() - &p.gamma).mul_i64(2)).exp()
}

/// `theta_j((k+1) omega) / theta_j(k omega)`, `j = 4` for DW and `3` for HT.
pub fn theta_ratio<R: Real>(p: &PhaseParams<R>, family: Family, k: usize) -> Result<R> {
    let ctx = ThetaContext::from_gamma(&p.gamma)?;
    let j = match family {
        Family::Dw => 4,
        Family::Ht => 3,
    };
    let om = omega(p);
    Ok(ctx.theta(j, &om.mul_i64(k as i64 + 1)) / ctx.theta(j, &om.mul_i64(k as i64)))
}

/// `h_k / ((k!)^2 G^{2k+1})` for every `k` of a norm sequence, with `h_k`
/// taken as `tau_{k+1} / tau_k`.
pub fn reduced_norms<R: Real>(p: &PhaseParams<R>, ns: &NormSequence<R>) -> Result<Vec<R>> {
    let g = norm_base(p)?;
    let g2 = g.clone() * &g;
    let mut scale = g;
    let mut fact = p.gamma.one_like();
    let mut out = Vec::with_capacity(ns.h.len());
    for (k, h) in tau_ratios(p, ns).iter().enumerate() {
        if k > 0 {
            fact = fact.mul_i64(k as i64);
            scale = scale * &g2;
        }
        out.push(h.clone() / (fact.clone() * &fact * &scale));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    KappaOverK,
    PowerLawN,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub model: FitModel,
    pub parameters: Vec<(String, f64)>,
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub points: usize,
}

impl FitReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Least squares by modified Gram-Schmidt on column-scaled data.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = y.len();
    let p = columns.len();
    if m < p {
        return Err(Error::InsufficientData { needed: p, got: m });
    }
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let mut q: Vec<Vec<f64>> = columns
        .iter()
        .zip(&scales)
        .map(|(c, s)| c.iter().map(|x| x / s).collect())
        .collect();
    let mut r = vec![vec![0.0; p]; p];
    for j in 0..p {
        for i in 0..j {
            let d: f64 = (0..m).map(|k| q[i][k] * q[j][k]).sum();
            r[i][j] = d;
            for k in 0..m {
                q[j][k] -= d * q[i][k];
            }
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(Error::InsufficientData { needed: p, got: j });
        }
        r[j][j] = norm;
        for x in q[j].iter_mut() {
            *x /= norm;
        }
    }
    let qty: Vec<f64> = (0..p).map(|j| (0..m).map(|k| q[j][k] * y[k]).sum()).collect();
    let mut coef = vec![0.0; p];
    for j in (0..p).rev() {
        let s: f64 = (j + 1..p).map(|i| r[j][i] * coef[i]).sum();
        coef[j] = (qty[j] - s) / r[j][j];
    }
    for (c, s) in coef.iter_mut().zip(&scales) {
        *c /= s;
    }
    let resid = (0..m)
        .map(|k| y[k] - (0..p).map(|j| coef[j] * columns[j][k]).sum::<f64>())
        .collect();
    Ok((coef, resid))
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

/// Estimates `kappa` from `y_k = k (h_k / ((k!)^2 G^{2k+1}) - 1)`.
///
/// Consecutive blocks of `window` points are averaged to suppress the
/// `cos(k omega)` corrections, then `kappa + beta / k` is fitted to the
/// block means.
pub fn fit_kappa(ks: &[usize], y: &[f64], window: usize) -> Result<FitReport> {
    if ks.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: ks.len(),
        });
    }
    let mut pairs: Vec<(usize, f64)> = ks.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by_key(|(k, _)| *k);
    let window = window.max(1);
    // block means, anchored at the last point so the largest k are used
    let blocks = pairs.len() / window;
    let skip = pairs.len() - blocks * window;
    let mut kbar = Vec::with_capacity(blocks);
    let mut ybar = Vec::with_capacity(blocks);
    for chunk in pairs[skip..].chunks(window) {
        kbar.push(chunk.iter().map(|(k, _)| *k as f64).sum::<f64>() / window as f64);
        ybar.push(chunk.iter().map(|(_, v)| v).sum::<f64>() / window as f64);
    }
    let ones = vec![1.0; kbar.len()];
    let inv: Vec<f64> = kbar.iter().map(|k| 1.0 / k).collect();
    let (coef, resid) = least_squares(&[ones, inv], &ybar)?;
    Ok(FitReport {
        model: FitModel::KappaOverK,
        parameters: vec![("kappa".into(), coef[0]), ("beta".into(), coef[1])],
        rms: rms(&resid),
        residuals: resid,
        points: pairs.len(),
    })
}

/// Fits `log Z_n - offset_n` against the named basis columns.
pub fn fit_power_law(
    ns: &[usize],
    log_z: &[f64],
    basis: &[(&str, fn(f64) -> f64)],
) -> Result<FitReport> {
    if ns.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: ns.len(),
        });
    }
    let mut pairs: Vec<(usize, f64)> = ns.iter().copied().zip(log_z.iter().copied()).collect();
    pairs.sort_by_key(|(n, _)| *n);
    let cols: Vec<Vec<f64>> = basis
        .iter()
        .map(|(_, f)| pairs.iter().map(|(n, _)| f(*n as f64)).collect())
        .collect();
    let y: Vec<f64> = pairs.iter().map(|(_, v)| *v).collect();
    let (coef, resid) = least_squares(&cols, &y)?;
    Ok(FitReport {
        model: FitModel::PowerLawN,
        parameters: basis
            .iter()
            .zip(coef)
            .map(|((name, _), c)| (name.to_string(), c))
            .collect(),
        rms: rms(&resid),
        residuals: resid,
        points: pairs.len(),
    })
}

/// Per-phase basis for `log Z_2n^HT`; in the antiferroelectric phase the
/// fitted data are `log Z_2n^HT - log(theta_3(n omega) theta_4(n omega))`.
pub fn phase_basis(phase: PhaseRegion) -> Vec<(&'static str, fn(f64) -> f64)> {
    match phase {
        PhaseRegion::Disordered => vec![
            ("log_f", |n| 2.0 * n * n),
            ("kappa", |n| n.ln()),
            ("const", |_| 1.0),
        ],
        PhaseRegion::Antiferroelectric => vec![("log_f", |n| 2.0 * n * n), ("const", |_| 1.0)],
        PhaseRegion::Ferroelectric => vec![
            ("log_f", |n| 2.0 * n * n),
            ("log_g", |n| 2.0 * n),
            ("const", |_| 1.0),
        ],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub phase: PhaseRegion,
    pub params: serde_json::Value,
    pub predicted: serde_json::Value,
    pub fitted: serde_json::Value,
    pub residuals: Vec<f64>,
}

pub fn prediction_json<R: Real>(a: &AsymptoticPrediction<R>) -> serde_json::Value {
    let s = |x: &Option<R>| match x {
        Some(v) => serde_json::Value::String(v.to_decimal()),
        None => serde_json::Value::String("unknown".into()),
    };
    let mut m = serde_json::Map::new();
    m.insert("F".into(), a.f.to_decimal().into());
    m.insert("G".into(), a.g.to_decimal().into());
    match a.phase {
        PhaseRegion::Disordered => {
            m.insert("kappa".into(), s(&a.kappa));
            m.insert("kappa_dw".into(), s(&a.kappa_dw));
            m.insert("kappa_ht".into(), s(&a.kappa_ht));
            m.insert("omega".into(), s(&a.omega));
            m.insert("C".into(), "unknown".into());
        }
        PhaseRegion::Antiferroelectric => {
            m.insert("omega".into(), s(&a.omega));
            if a.n.is_some() {
                m.insert("theta3_n_omega".into(), s(&a.theta3_n));
                m.insert("theta4_n_omega".into(), s(&a.theta4_n));
            }
            m.insert("C".into(), "unknown".into());
        }
        PhaseRegion::Ferroelectric => {
            m.insert("C".into(), s(&a.c));
        }
    }
    if let Some(n) = a.n {
        m.insert("n".into(), n.into());
        m.insert("leading".into(), s(&a.leading));
    }
    serde_json::Value::Object(m)
}

pub fn params_json<R: Real>(p: &PhaseParams<R>) -> serde_json::Value {
    serde_json::json!({
        "phase": p.phase,
        "gamma": p.gamma.to_decimal(),
        "t": p.t.to_decimal(),
        "precision_bits": p.precision_bits,
    })
}

pub fn fit_json(f: &FitReport) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    m.insert("model".into(), serde_json::to_value(f.model).unwrap_or_default());
    for (k, v) in &f.parameters {
        m.insert(k.clone(), (*v).into());
    }
    m.insert("rms".into(), f.rms.into());
    m.insert("points".into(), f.points.into());
    serde_json::Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::BigFloat;
    use crate::scalar::Scalar;
    use crate::model::parse_real;

    const BITS: u32 = 256;

    fn bf(x: f64) -> BigFloat {
        BigFloat::from_f64(x, BITS)
    }

    fn close(a: &BigFloat, b: &BigFloat, tol: f64) -> bool {
        ((a.clone() - b).abs() / b.abs()).to_f64() <= tol
    }

    fn params(phase: PhaseRegion, g: BigFloat, t: BigFloat) -> PhaseParams<BigFloat> {
        PhaseParams::new(phase, g, t, BITS).unwrap()
    }

    #[test]
    fn isotropic_disordered_prediction() {
        let p = params(PhaseRegion::Disordered, parse_real("pi/3", BITS).unwrap(), bf(0.0));
        let a = predict_leading(&p, None).unwrap();
        assert!(close(&a.f, &(bf(9.0) / bf(8.0)), 1e-70));
        assert!(close(a.kappa.as_ref().unwrap(), &(bf(1.0) / bf(18.0)), 1e-70));
    }

    #[test]
    fn ferroelectric_prediction_constants() {
        let p = params(PhaseRegion::Ferroelectric, bf(0.5), bf(1.0));
        let a = predict_leading(&p, Some(3)).unwrap();
        assert!(close(&a.f, &bf(1.5).sinh(), 1e-70));
        assert!(close(&a.g, &bf(-0.5).exp(), 1e-70));
        let e2 = bf(-2.0).exp();
        let c = (bf(1.0) + &e2) * (bf(1.0) - &e2);
        assert!(close(a.c.as_ref().unwrap(), &c, 1e-70));
    }

    #[test]
    fn antiferroelectric_at_zero_t() {
        let p = params(PhaseRegion::Antiferroelectric, bf(1.2), bf(0.0));
        let om = omega(&p);
        let half_pi = BigFloat::pi(BITS).ldexp(-1);
        assert!(close(&om, &half_pi, 1e-70));
        let ctx = ThetaContext::from_gamma(&p.gamma).unwrap();
        assert!(close(&ctx.theta(1, &om), &ctx.theta(2, &bf(0.0)), 1e-70));
        // theta ratios at omega = pi/2 alternate with period two
        for family in Family::BOTH {
            let r: Vec<BigFloat> = (0..8).map(|k| theta_ratio(&p, family, k).unwrap()).collect();
            for k in 0..6 {
                assert!(close(&r[k], &r[k + 2], 1e-70));
            }
            assert!(!close(&r[0], &r[1], 1e-10));
            assert!(close(&(r[0].clone() * &r[1]), &bf(1.0), 1e-70));
        }
    }

    #[test]
    fn families_differ_only_through_kappa() {
        let p = params(PhaseRegion::Disordered, bf(0.6), bf(0.1));
        let k = 7;
        let dw = predict_hk(&p, Family::Dw, k).unwrap();
        let ht = predict_hk(&p, Family::Ht, k).unwrap();
        let g = norm_base(&p).unwrap();
        let base = factorial(&g, k as u64) * factorial(&g, k as u64) * powi(&g, 2 * k as i64 + 1);
        let kdw = (dw / &base - bf(1.0)) * bf(k as f64);
        let kht = (ht / &base - bf(1.0)) * bf(k as f64);
        assert!(close(&kdw, &kappa_dw(&p.gamma), 1e-70));
        assert!(close(&kht, &kappa_ht(&p.gamma), 1e-70));
    }

    #[test]
    fn ferroelectric_norm_prediction_is_meixner() {
        let p = params(PhaseRegion::Ferroelectric, bf(0.5), bf(1.0));
        assert_eq!(
            predict_hk(&p, Family::Ht, 10).unwrap(),
            meixner_norm(10, &bf(-1.0).exp())
        );
    }

    #[test]
    fn window_lengths() {
        let pi = std::f64::consts::PI;
        assert_eq!(window_length(-pi * 1.1), 4);
        assert_eq!(window_length(2.0 * pi / 7.0), 7);
        assert_eq!(window_length(0.01), 16);
        assert_eq!(window_length(2.0 * pi), 16);
    }

    #[test]
    fn kappa_fit_recovers_its_own_model() {
        let ks: Vec<usize> = (1..=80).collect();
        let y: Vec<f64> = ks.iter().map(|_| 0.3).collect();
        let fit = fit_kappa(&ks, &y, 4).unwrap();
        assert!((fit.get("kappa").unwrap() - 0.3).abs() < 1e-6);
        // the same through h_k built from the model
        let g = 1.7f64;
        let reduced: Vec<f64> = ks.iter().map(|&k| 1.0 + 0.3 / k as f64).collect();
        let y: Vec<f64> = ks.iter().zip(&reduced).map(|(&k, r)| k as f64 * (r - 1.0)).collect();
        let fit = fit_kappa(&ks, &y, 4).unwrap();
        assert!((fit.get("kappa").unwrap() - 0.3).abs() < 1e-6, "{g}");
    }

    #[test]
    fn kappa_fit_suppresses_oscillation() {
        let ks: Vec<usize> = (10..=80).collect();
        let w = 2.0 * std::f64::consts::PI / 6.0;
        let kappa1 = 1.4f64;
        let y: Vec<f64> = ks
            .iter()
            .map(|&k| {
                let k = k as f64;
                k * (0.3 / k + 0.8 * k.powf(-kappa1) * (k * w).cos())
            })
            .collect();
        let fit = fit_kappa(&ks, &y, window_length(w)).unwrap();
        let est = fit.get("kappa").unwrap();
        assert!((est - 0.3).abs() / 0.3 < 0.01, "{est}");
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_kappa(&[1, 2, 3], &[0.0; 3], 4),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn power_law_fit_recovers_planted_coefficients() {
        let ns: Vec<usize> = (8..=40).collect();
        let y: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let n = n as f64;
                2.0 * n * n * 0.17 + 0.0444 * n.ln() - 1.3
            })
            .collect();
        let fit = fit_power_law(&ns, &y, &phase_basis(PhaseRegion::Disordered)).unwrap();
        assert!((fit.get("log_f").unwrap() - 0.17).abs() < 1e-10);
        assert!((fit.get("kappa").unwrap() - 0.0444).abs() < 1e-8);
        assert!((fit.get("const").unwrap() + 1.3).abs() < 1e-7);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn disordered_f_is_ab_times_g(g in 0.1f64..1.5, z in -0.95f64..0.95) {
                let p = params(PhaseRegion::Disordered, bf(g), bf(g * z));
                let a = predict_leading(&p, None).unwrap();
                let (gm, t) = (&p.gamma, &p.t);
                let pi = BigFloat::pi(BITS);
                let direct = (gm.clone() - t).sin() * (gm.clone() + t).sin() * &pi
                    / (gm.mul_i64(2) * (pi.clone() * t / gm.mul_i64(2)).cos());
                prop_assert!(close(&a.f, &direct, 1e-60));
                let sum = kappa_dw(gm) + kappa_ht(gm);
                prop_assert!(close(&sum, a.kappa.as_ref().unwrap(), 1e-60));
            }

            #[test]
            fn theta_ratios_telescope(g in 0.4f64..3.0, z in -0.9f64..0.9, n in 1usize..12) {
                let p = params(PhaseRegion::Antiferroelectric, bf(g), bf(g * z));
                let ctx = ThetaContext::from_gamma(&p.gamma).unwrap();
                let om = omega(&p);
                for (family, j) in [(Family::Dw, 4u8), (Family::Ht, 3u8)] {
                    let prod = (0..n).fold(bf(1.0), |acc, k| acc * theta_ratio(&p, family, k).unwrap());
                    let expect = ctx.theta(j, &om.mul_i64(n as i64)) / ctx.theta(j, &bf(0.0));
                    prop_assert!(close(&prod, &expect, 1e-60));
                }
            }
        }
    }
}
