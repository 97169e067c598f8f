//! Phase regions, weight parametrizations and parameter plumbing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bigfloat::BigFloat;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub const DEFAULT_PRECISION_BITS: u32 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseRegion {
    Ferroelectric,
    Antiferroelectric,
    Disordered,
}

impl PhaseRegion {
    pub const ALL: [PhaseRegion; 3] = [
        PhaseRegion::Disordered,
        PhaseRegion::Antiferroelectric,
        PhaseRegion::Ferroelectric,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            PhaseRegion::Ferroelectric => "f",
            PhaseRegion::Antiferroelectric => "af",
            PhaseRegion::Disordered => "d",
        }
    }
}

impl fmt::Display for PhaseRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseRegion::Ferroelectric => "ferroelectric",
            PhaseRegion::Antiferroelectric => "antiferroelectric",
            PhaseRegion::Disordered => "disordered",
        })
    }
}

impl FromStr for PhaseRegion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f" | "fe" | "ferro" | "ferroelectric" => Ok(PhaseRegion::Ferroelectric),
            "af" | "antiferro" | "antiferroelectric" => Ok(PhaseRegion::Antiferroelectric),
            "d" | "dis" | "disordered" => Ok(PhaseRegion::Disordered),
            other => Err(format!("unknown phase {other:?} (expected d, af or f)")),
        }
    }
}

/// Phase region together with the two free parameters `(gamma, t)`.
///
/// Construction validates the phase's domain:
///
/// | phase | domain |
/// |-------|--------|
/// | ferroelectric | `0 < gamma < t` |
/// | antiferroelectric | `|t| < gamma` |
/// | disordered | `|t| < gamma < pi/2` |
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseParams<R> {
    pub phase: PhaseRegion,
    pub gamma: R,
    pub t: R,
    pub precision_bits: u32,
}

impl<R: Real> PhaseParams<R> {
    pub fn new(phase: PhaseRegion, gamma: R, t: R, precision_bits: u32) -> Result<Self> {
        let p = PhaseParams {
            phase,
            gamma: gamma.to_precision(precision_bits),
            t: t.to_precision(precision_bits),
            precision_bits,
        };
        p.check_domain()?;
        let w = weights_from_params(&p)?;
        let d = delta(&w.a, &w.b, &w.c)?;
        let classified = classify_phase(&d)?;
        debug_assert_eq!(classified, phase);
        Ok(p)
    }

    fn check_domain(&self) -> Result<()> {
        let zero = self.gamma.zero_like();
        let violation = |what: String| Error::ParameterDomain {
            phase: self.phase,
            violated: what,
        };
        let (g, t) = (&self.gamma, &self.t);
        let describe = |rel: &str| {
            format!("{rel} (gamma = {}, t = {})", g.to_f64(), t.to_f64())
        };
        if *g <= zero {
            return Err(violation(describe("gamma > 0")));
        }
        match self.phase {
            PhaseRegion::Ferroelectric => {
                if *t <= *g {
                    return Err(violation(describe("gamma < t")));
                }
            }
            PhaseRegion::Antiferroelectric => {
                if t.abs() >= *g {
                    return Err(violation(describe("|t| < gamma")));
                }
            }
            PhaseRegion::Disordered => {
                if t.abs() >= *g {
                    return Err(violation(describe("|t| < gamma")));
                }
                let half_pi = g.pi_like().ldexp(-1);
                if *g >= half_pi {
                    return Err(violation(describe("gamma < pi/2")));
                }
            }
        }
        Ok(())
    }

    /// `zeta = t / gamma`.
    pub fn zeta(&self) -> R {
        self.t.clone() / &self.gamma
    }

    /// Same parameters carried at a different working precision.
    pub fn at_precision(&self, bits: u32) -> Self {
        PhaseParams {
            phase: self.phase,
            gamma: self.gamma.to_precision(bits),
            t: self.t.to_precision(bits),
            precision_bits: bits,
        }
    }

    pub fn with_t(&self, t: R) -> Result<Self> {
        PhaseParams::new(self.phase, self.gamma.clone(), t, self.precision_bits)
    }

    pub fn describe(&self) -> String {
        format!(
            "{} gamma={} t={}",
            self.phase.short_name(),
            self.gamma.to_f64(),
            self.t.to_f64()
        )
    }
}

/// Homogeneous weights `(a, b, c)` and the per-vertex weights of the
/// half-turn model, `w = (sqrt a, sqrt a, sqrt b, sqrt b, sqrt c, sqrt c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoltzmannWeights<R> {
    pub a: R,
    pub b: R,
    pub c: R,
    pub w: [R; 6],
}

impl<R: Real> BoltzmannWeights<R> {
    pub fn from_abc(a: R, b: R, c: R) -> Self {
        let (sa, sb, sc) = (a.sqrt(), b.sqrt(), c.sqrt());
        BoltzmannWeights {
            w: [sa.clone(), sa, sb.clone(), sb, sc.clone(), sc],
            a,
            b,
            c,
        }
    }

    /// Weights `(a, a, b, b, c, c)` of the plain domain wall model.
    pub fn dwbc_weights(&self) -> [R; 6] {
        [
            self.a.clone(),
            self.a.clone(),
            self.b.clone(),
            self.b.clone(),
            self.c.clone(),
            self.c.clone(),
        ]
    }
}

pub fn weights_from_params<R: Real>(p: &PhaseParams<R>) -> Result<BoltzmannWeights<R>> {
    p.check_domain()?;
    let (g, t) = (&p.gamma, &p.t);
    let two_g = g.clone() + g;
    let (a, b, c) = match p.phase {
        PhaseRegion::Ferroelectric => (
            (t.clone() - g).sinh(),
            (t.clone() + g).sinh(),
            two_g.sinh(),
        ),
        PhaseRegion::Antiferroelectric => (
            (g.clone() - t).sinh(),
            (g.clone() + t).sinh(),
            two_g.sinh(),
        ),
        PhaseRegion::Disordered => (
            (g.clone() - t).sin(),
            (g.clone() + t).sin(),
            two_g.sin(),
        ),
    };
    Ok(BoltzmannWeights::from_abc(a, b, c))
}

/// `Delta = (a^2 + b^2 - c^2) / (2ab)`.
///
/// Rejects `||Delta| - 1| < 2^(-bits/2)`.
pub fn delta<R: Real>(a: &R, b: &R, c: &R) -> Result<R> {
    for (i, x) in [a, b, c].into_iter().enumerate() {
        if !x.is_positive() {
            return Err(Error::NonPositiveWeight { index: i + 1 });
        }
    }
    let num = a.clone() * a + b.clone() * b - c.clone() * c;
    let d = num / (a.clone() * b).mul_i64(2);
    let distance = d.abs() - d.one_like();
    if distance.log2_abs() < -(d.precision() as f64) / 2.0 {
        return Err(Error::PhaseBoundary {
            distance: distance.to_f64(),
        });
    }
    Ok(d)
}

pub fn classify_phase<R: Real>(delta: &R) -> Result<PhaseRegion> {
    let one = delta.one_like();
    let distance = delta.abs() - &one;
    if distance.log2_abs() < -(delta.precision() as f64) / 2.0 {
        return Err(Error::PhaseBoundary {
            distance: distance.to_f64(),
        });
    }
    Ok(if *delta > one {
        PhaseRegion::Ferroelectric
    } else if *delta < -one {
        PhaseRegion::Antiferroelectric
    } else {
        PhaseRegion::Disordered
    })
}

/// Result of collapsing six vertex weights onto `(a, b, c)`.
///
/// `Z(w1..w6) = drift^n * Z(a, a, b, b, c, c)` on the `2n x 2n` lattice,
/// with `drift = w5 / w6`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedWeights<R> {
    pub a: R,
    pub b: R,
    pub c: R,
    pub drift: R,
}

pub fn reduce_general_weights<R: Real>(w: &[R; 6]) -> Result<ReducedWeights<R>> {
    for (i, x) in w.iter().enumerate() {
        if !x.is_positive() {
            return Err(Error::NonPositiveWeight { index: i + 1 });
        }
    }
    Ok(ReducedWeights {
        a: (w[0].clone() * &w[1]).sqrt(),
        b: (w[2].clone() * &w[3]).sqrt(),
        c: (w[4].clone() * &w[5]).sqrt(),
        drift: w[4].clone() / &w[5],
    })
}

/// Parses a parameter value: a decimal literal or a rational multiple of
/// pi written as `pi`, `pi/3`, `2pi/5`, `2*pi/5`, `-pi/7`.
///
/// Multiples of pi are evaluated at `bits` of precision so that grid points
/// such as `gamma = pi/3` do not lose accuracy at parse time.
pub fn parse_real(s: &str, bits: u32) -> Result<BigFloat> {
    let src = s.trim();
    if let Some(x) = BigFloat::parse(src, bits) {
        return Ok(x);
    }
    let err = || Error::Parse(s.to_string());
    let lower = src.to_ascii_lowercase().replace(' ', "");
    let (sign, body) = match lower.strip_prefix('-') {
        Some(rest) => (-1i64, rest.to_string()),
        None => (1i64, lower),
    };
    let pos = body.find("pi").ok_or_else(err)?;
    let coeff = body[..pos].trim_end_matches('*');
    let num: i64 = if coeff.is_empty() {
        1
    } else {
        coeff.parse().map_err(|_| err())?
    };
    let rest = &body[pos + 2..];
    let den: i64 = match rest.strip_prefix('/') {
        Some(d) => d.parse().map_err(|_| err())?,
        None if rest.is_empty() => 1,
        None => return Err(err()),
    };
    if den == 0 {
        return Err(err());
    }
    let pi = BigFloat::pi(bits);
    Ok(pi.mul_i64(sign * num) / pi.from_i64_like(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bf(x: f64) -> BigFloat {
        BigFloat::from_f64(x, 256)
    }

    fn params(phase: PhaseRegion, g: BigFloat, t: f64) -> PhaseParams<BigFloat> {
        PhaseParams::new(phase, g, bf(t), 256).unwrap()
    }

    fn close(x: &BigFloat, y: &BigFloat, tol: f64) -> bool {
        (x.clone() - y).abs().to_f64() <= tol
    }

    #[test]
    fn disordered_pi_third_is_isotropic() {
        let p = params(PhaseRegion::Disordered, parse_real("pi/3", 256).unwrap(), 0.0);
        let w = weights_from_params(&p).unwrap();
        let expected = bf(3.0).sqrt().ldexp(-1);
        for x in [&w.a, &w.b, &w.c] {
            assert!(close(x, &expected, 1e-70));
        }
    }

    #[test]
    fn disordered_pi_sixth() {
        let p = params(PhaseRegion::Disordered, parse_real("pi/6", 256).unwrap(), 0.0);
        let w = weights_from_params(&p).unwrap();
        assert!(close(&w.a, &bf(0.5), 1e-70));
        assert!(close(&w.b, &bf(0.5), 1e-70));
        assert!(close(&w.c, &bf(3.0).sqrt().ldexp(-1), 1e-70));
    }

    #[test]
    fn ferroelectric_weights_are_shifted_sinh() {
        let p = params(PhaseRegion::Ferroelectric, bf(0.5), 1.0);
        let w = weights_from_params(&p).unwrap();
        assert!(close(&w.a, &bf(0.5).sinh(), 1e-70));
        assert!(close(&w.b, &bf(1.5).sinh(), 1e-70));
        assert!(close(&w.c, &bf(1.0).sinh(), 1e-70));
        // per-vertex weights are square roots
        assert!(close(&(w.w[0].clone() * &w.w[1]), &w.a, 1e-70));
        assert!(close(&(w.w[4].clone() * &w.w[5]), &w.c, 1e-70));
    }

    #[test]
    fn delta_signs_per_phase() {
        let d = delta(&bf(1.0), &bf(1.0), &bf(1.0)).unwrap();
        assert!(close(&d, &bf(0.5), 1e-70));

        let f = weights_from_params(&params(PhaseRegion::Ferroelectric, bf(0.5), 1.0)).unwrap();
        assert!(delta(&f.a, &f.b, &f.c).unwrap().to_f64() > 1.0);
        let af =
            weights_from_params(&params(PhaseRegion::Antiferroelectric, bf(1.2), 0.3)).unwrap();
        assert!(delta(&af.a, &af.b, &af.c).unwrap().to_f64() < -1.0);
    }

    #[test]
    fn boundary_is_rejected() {
        // a = b, c = 0 would be Delta = 1 exactly; c tiny but positive sits on it
        let err = delta(&bf(1.0), &bf(1.0), &bf(1e-60)).unwrap_err();
        assert!(matches!(err, Error::PhaseBoundary { .. }));
        assert!(matches!(
            classify_phase(&bf(-1.0)),
            Err(Error::PhaseBoundary { .. })
        ));
        assert_eq!(classify_phase(&bf(0.2)).unwrap(), PhaseRegion::Disordered);
    }

    #[test]
    fn domain_violations_name_the_inequality() {
        let err = PhaseParams::new(PhaseRegion::Antiferroelectric, bf(1.2), bf(1.3), 256)
            .unwrap_err();
        match err {
            Error::ParameterDomain { violated, .. } => assert!(violated.contains("|t| < gamma")),
            other => panic!("unexpected {other:?}"),
        }
        let err = PhaseParams::new(PhaseRegion::Disordered, bf(1.6), bf(0.0), 256).unwrap_err();
        assert!(err.to_string().contains("gamma < pi/2"));
        let err = PhaseParams::new(PhaseRegion::Ferroelectric, bf(0.5), bf(0.4), 256).unwrap_err();
        assert!(err.to_string().contains("gamma < t"));
        let err = PhaseParams::new(PhaseRegion::Ferroelectric, bf(-0.5), bf(1.0), 256).unwrap_err();
        assert!(err.to_string().contains("gamma > 0"));
    }

    #[test]
    fn reduce_general_weights_examples() {
        let ones = [1.0f64; 6];
        let r = reduce_general_weights(&ones).unwrap();
        assert_eq!((r.a, r.b, r.c, r.drift), (1.0, 1.0, 1.0, 1.0));

        let r = reduce_general_weights(&[2.0, 2.0, 3.0, 3.0, 5.0, 5.0]).unwrap();
        assert_eq!((r.a, r.b, r.c, r.drift), (2.0, 3.0, 5.0, 1.0));

        let r = reduce_general_weights(&[1.0, 4.0, 1.0, 9.0, 2.0, 8.0]).unwrap();
        assert_eq!((r.a, r.b, r.c, r.drift), (2.0, 3.0, 4.0, 0.25));

        assert_eq!(
            reduce_general_weights(&[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]).unwrap_err(),
            Error::NonPositiveWeight { index: 3 }
        );
    }

    #[test]
    fn parse_real_accepts_pi_multiples() {
        let third = parse_real("pi/3", 512).unwrap();
        let expected = BigFloat::pi(512) / BigFloat::from_i64(3, 512);
        assert_eq!(third, expected);
        let x = parse_real("2*pi/5", 128).unwrap();
        assert!((x.to_f64() - 2.0 * std::f64::consts::PI / 5.0).abs() < 1e-15);
        assert!((parse_real("-pi", 64).unwrap().to_f64() + std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(parse_real("0.125", 64).unwrap().to_f64(), 0.125);
        assert!(parse_real("pi/0", 64).is_err());
        assert!(parse_real("tau", 64).is_err());
    }

    #[test]
    fn phase_names_round_trip() {
        for phase in PhaseRegion::ALL {
            assert_eq!(phase.short_name().parse::<PhaseRegion>().unwrap(), phase);
        }
    }
}
