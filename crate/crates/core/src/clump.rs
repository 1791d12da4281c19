//! Clump-size distributions: the law of the number of parasites acquired
//! at a single infectious contact.
//!
//! Every variant exposes its pmf, PGF (real and complex), low-order PGF
//! derivatives, tail probabilities, a certified truncation helper, and a
//! log-concavity/log-convexity classification.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Distribution;
use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// Hard cap on truncation searches; beyond this the distribution is
/// treated as pathological for the numeric layers.
pub const TRUNCATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
enum Kind {
    /// Point mass at `c >= 1`.
    Degenerate { c: u32 },
    /// pmf `p (1-p)^k` on the nonnegative integers, `0 < p < 1`.
    Geometric { p: f64 },
    /// Mean `mean`, variance `mean + mean^2 / dispersion`.
    NegativeBinomial { mean: f64, dispersion: f64 },
    Poisson { mean: f64 },
    /// Explicit weights on `{0, 1, ..., n}`.
    FiniteSupport { weights: Vec<f64> },
    /// Mixture of geometrics; strictly log-convex when two or more
    /// distinct success probabilities carry positive weight.
    GeometricMixture { weights: Vec<f64>, ps: Vec<f64> },
}

/// Distribution of the clump size `C`.
///
/// Invariants enforced at construction: the pmf is proper, the mean is
/// finite, and `P(C >= 1) > 0` (an identically-zero clump would make the
/// infection process trivial).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClumpDistribution {
    kind: Kind,
}

/// Log-shape classification of a pmf on the nonnegative integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LogShapeClass {
    LogConcave,
    LogConvex,
    /// Constant pmf ratio (geometric): both inequalities hold everywhere.
    Both,
    Neither,
}

/// Classification result. For a strict class the witness is an index where
/// the opposite inequality fails; for `Neither` it is an index where the
/// checks break down (an interior zero, or a failed inequality).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LogShape {
    pub classification: LogShapeClass,
    pub witness_index: Option<u64>,
}

fn check_prob(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidClump(format!("{name} = {x} not in [0, 1]")));
    }
    Ok(())
}

impl ClumpDistribution {
    /// Point mass at `c` parasites per contact, `c >= 1`.
    pub fn degenerate(c: u32) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidClump(
                "degenerate clump at 0 has P(C >= 1) = 0".into(),
            ));
        }
        Ok(Self {
            kind: Kind::Degenerate { c },
        })
    }

    /// Geometric on the nonnegative integers with pmf `p (1-p)^k`.
    ///
    /// `p = 1` is rejected: it is the point mass at 0.
    pub fn geometric(p: f64) -> Result<Self> {
        check_prob("p", p)?;
        if p == 0.0 {
            return Err(Error::InvalidClump("geometric with p = 0 is improper".into()));
        }
        if p == 1.0 {
            return Err(Error::InvalidClump(
                "geometric with p = 1 has P(C >= 1) = 0".into(),
            ));
        }
        Ok(Self {
            kind: Kind::Geometric { p },
        })
    }

    /// Negative binomial with mean `mean` and variance `mean + mean^2 / dispersion`.
    pub fn negative_binomial(mean: f64, dispersion: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidClump(format!("negbin mean = {mean} must be > 0")));
        }
        if !(dispersion.is_finite() && dispersion > 0.0) {
            return Err(Error::InvalidClump(format!(
                "negbin dispersion = {dispersion} must be > 0"
            )));
        }
        Ok(Self {
            kind: Kind::NegativeBinomial { mean, dispersion },
        })
    }

    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidClump(format!("poisson mean = {mean} must be > 0")));
        }
        Ok(Self {
            kind: Kind::Poisson { mean },
        })
    }

    /// Weights on `{0, 1, ..., weights.len() - 1}`; must sum to 1 within 1e-9
    /// (renormalized exactly) and place positive mass above 0.
    pub fn finite_support(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidClump("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidClump("weights must be finite and >= 0".into()));
        }
        let total: f64 = crate::numeric::kahan_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidClump(format!(
                "weights sum to {total}, expected 1 within 1e-9"
            )));
        }
        if weights.iter().skip(1).all(|w| *w == 0.0) {
            return Err(Error::InvalidClump("P(C >= 1) = 0".into()));
        }
        let mut weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        while weights.last() == Some(&0.0) {
            weights.pop();
        }
        Ok(Self {
            kind: Kind::FiniteSupport { weights },
        })
    }

    /// Mixture of geometrics with the given component weights and success
    /// probabilities (each strictly inside `(0, 1)`).
    pub fn geometric_mixture(weights: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if weights.len() != ps.len() || weights.is_empty() {
            return Err(Error::InvalidClump(
                "mixture weights and success probabilities must have equal, nonzero length".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidClump("mixture weights must be > 0".into()));
        }
        let total: f64 = crate::numeric::kahan_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidClump(format!(
                "mixture weights sum to {total}, expected 1 within 1e-9"
            )));
        }
        for &p in &ps {
            check_prob("mixture p", p)?;
            if p == 0.0 || p == 1.0 {
                return Err(Error::InvalidClump(
                    "mixture success probabilities must lie strictly in (0, 1)".into(),
                ));
            }
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            kind: Kind::GeometricMixture { weights, ps },
        })
    }

    /// pmf at `k`.
    pub fn pmf(&self, k: u64) -> f64 {
        match &self.kind {
            Kind::Degenerate { c } => {
                if k == u64::from(*c) {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Geometric { p } => geometric_pmf(*p, k),
            Kind::NegativeBinomial { mean, dispersion } => {
                let b = mean / dispersion;
                let q = b / (1.0 + b);
                let kf = k as f64;
                (ln_gamma(dispersion + kf) - ln_gamma(*dispersion) - ln_gamma(kf + 1.0)
                    + dispersion * (1.0 - q).ln()
                    + kf * q.ln())
                .exp()
            }
            Kind::Poisson { mean } => {
                let kf = k as f64;
                (-mean + kf * mean.ln() - ln_gamma(kf + 1.0)).exp()
            }
            Kind::FiniteSupport { weights } => {
                weights.get(k as usize).copied().unwrap_or(0.0)
            }
            Kind::GeometricMixture { weights, ps } => weights
                .iter()
                .zip(ps)
                .map(|(w, p)| w * geometric_pmf(*p, k))
                .sum(),
        }
    }

    /// PGF at a real `z` in `[0, 1]`.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        if !(z.is_finite() && (0.0..=1.0).contains(&z)) {
            return Err(Error::InvalidParameter(format!("pgf argument z = {z} not in [0, 1]")));
        }
        Ok(self.pgf_complex(Complex64::new(z, 0.0)).re)
    }

    /// PGF extended to the complex plane (valid wherever the underlying
    /// series converges; at least the closed unit disk).
    pub fn pgf_complex(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            Kind::Degenerate { c } => z.powu(*c),
            Kind::Geometric { p } => {
                let q = 1.0 - p;
                *p / (one - q * z)
            }
            Kind::NegativeBinomial { mean, dispersion } => {
                let b = mean / dispersion;
                (one + b * (one - z)).powf(-dispersion)
            }
            Kind::Poisson { mean } => (mean * (z - one)).exp(),
            Kind::FiniteSupport { weights } => horner(weights, z),
            Kind::GeometricMixture { weights, ps } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (w, p) in weights.iter().zip(ps) {
                    let q = 1.0 - p;
                    acc += *w * *p / (one - q * z);
                }
                acc
            }
        }
    }

    /// First derivative of the PGF, extended to the complex plane.
    pub fn pgf_deriv_complex(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            Kind::Degenerate { c } => {
                let c = *c;
                if c == 1 {
                    one
                } else {
                    f64::from(c) * z.powu(c - 1)
                }
            }
            Kind::Geometric { p } => {
                let q = 1.0 - p;
                let d = one - q * z;
                *p * q / (d * d)
            }
            Kind::NegativeBinomial { mean, dispersion } => {
                let b = mean / dispersion;
                dispersion * b * (one + b * (one - z)).powf(-dispersion - 1.0)
            }
            Kind::Poisson { mean } => *mean * (mean * (z - one)).exp(),
            Kind::FiniteSupport { weights } => {
                let deriv: Vec<f64> = weights
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, w)| k as f64 * w)
                    .collect();
                horner(&deriv, z)
            }
            Kind::GeometricMixture { weights, ps } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (w, p) in weights.iter().zip(ps) {
                    let q = 1.0 - p;
                    let d = one - q * z;
                    acc += *w * *p * q / (d * d);
                }
                acc
            }
        }
    }

    fn pgf_second_deriv(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Degenerate { c } => {
                if *c < 2 {
                    0.0
                } else {
                    let cf = f64::from(*c);
                    cf * (cf - 1.0) * z.powi(*c as i32 - 2)
                }
            }
            Kind::Geometric { p } => {
                let q = 1.0 - p;
                2.0 * p * q * q / (1.0 - q * z).powi(3)
            }
            Kind::NegativeBinomial { mean, dispersion } => {
                let b = mean / dispersion;
                dispersion * (dispersion + 1.0) * b * b
                    * (1.0 + b * (1.0 - z)).powf(-dispersion - 2.0)
            }
            Kind::Poisson { mean } => mean * mean * (mean * (z - 1.0)).exp(),
            Kind::FiniteSupport { weights } => weights
                .iter()
                .enumerate()
                .skip(2)
                .map(|(k, w)| {
                    let kf = k as f64;
                    kf * (kf - 1.0) * w * z.powi(k as i32 - 2)
                })
                .sum(),
            Kind::GeometricMixture { weights, ps } => weights
                .iter()
                .zip(ps)
                .map(|(w, p)| {
                    let q = 1.0 - p;
                    w * 2.0 * p * q * q / (1.0 - q * z).powi(3)
                })
                .sum(),
        }
    }

    /// First or second derivative of the PGF at a real `z` in `[0, 1]`.
    pub fn pgf_deriv(&self, z: f64, order: u32) -> Result<f64> {
        if !(z.is_finite() && (0.0..=1.0).contains(&z)) {
            return Err(Error::InvalidParameter(format!(
                "pgf_deriv argument z = {z} not in [0, 1]"
            )));
        }
        match order {
            1 => Ok(self.pgf_deriv_complex(Complex64::new(z, 0.0)).re),
            2 => Ok(self.pgf_second_deriv(z)),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }

    /// `E[C] = G_C'(1)`.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::Degenerate { c } => f64::from(*c),
            Kind::Geometric { p } => (1.0 - p) / p,
            Kind::NegativeBinomial { mean, .. } => *mean,
            Kind::Poisson { mean } => *mean,
            Kind::FiniteSupport { weights } => weights
                .iter()
                .enumerate()
                .map(|(k, w)| k as f64 * w)
                .sum(),
            Kind::GeometricMixture { weights, ps } => weights
                .iter()
                .zip(ps)
                .map(|(w, p)| w * (1.0 - p) / p)
                .sum(),
        }
    }

    /// Tail probability `beta_j = P(C > j)`, in closed form per variant.
    pub fn tail_beta(&self, j: u64) -> f64 {
        match &self.kind {
            Kind::Degenerate { c } => {
                if j < u64::from(*c) {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Geometric { p } => (1.0 - p).powi(saturating_i32(j + 1)),
            Kind::NegativeBinomial { mean, dispersion } => {
                let b = mean / dispersion;
                let q = b / (1.0 + b);
                beta_reg((j + 1) as f64, *dispersion, q)
            }
            Kind::Poisson { mean } => gamma_lr((j + 1) as f64, *mean),
            Kind::FiniteSupport { weights } => {
                let start = (j + 1).min(weights.len() as u64) as usize;
                crate::numeric::kahan_sum(weights[start..].iter().copied())
            }
            Kind::GeometricMixture { weights, ps } => weights
                .iter()
                .zip(ps)
                .map(|(w, p)| w * (1.0 - p).powi(saturating_i32(j + 1)))
                .sum(),
        }
    }

    /// Smallest support bound `B` with `P(C > B) < tol`, found by binary
    /// search on the closed-form tail. Errors if the bound would exceed
    /// [`TRUNCATION_CAP`].
    pub fn truncate(&self, tol: f64) -> Result<u64> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation tol = {tol} must be > 0")));
        }
        if self.tail_beta(0) < tol {
            return Ok(0);
        }
        if self.tail_beta(TRUNCATION_CAP) >= tol {
            return Err(Error::TruncationOverflow {
                cap: TRUNCATION_CAP,
            });
        }
        let (mut lo, mut hi) = (0u64, TRUNCATION_CAP);
        // invariant: tail(lo) >= tol, tail(hi) < tol
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_beta(mid) < tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Distance from the real point `from` to the nearest singularity of
    /// the PGF (infinite for entire PGFs). Controls the width of the
    /// series window used when integrating near a removable singularity.
    pub(crate) fn singularity_distance(&self, from: f64) -> f64 {
        match &self.kind {
            Kind::Degenerate { .. } | Kind::Poisson { .. } | Kind::FiniteSupport { .. } => {
                f64::INFINITY
            }
            Kind::Geometric { p } => 1.0 / (1.0 - p) - from,
            Kind::NegativeBinomial { mean, dispersion } => {
                1.0 + dispersion / mean - from
            }
            Kind::GeometricMixture { ps, .. } => ps
                .iter()
                .map(|p| 1.0 / (1.0 - p) - from)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Classify the pmf as log-concave, log-convex, both, or neither.
    ///
    /// Parametric variants use their known classification; finite tables
    /// are checked index by index over the interior of their support. An
    /// interior zero flanked by positive mass yields `Neither` (the ratio
    /// argument breaks down there).
    pub fn classify_log_shape(&self, support_bound: u64) -> LogShape {
        match &self.kind {
            Kind::Poisson { .. } => LogShape {
                classification: LogShapeClass::LogConcave,
                witness_index: Some(1),
            },
            Kind::Geometric { .. } => LogShape {
                classification: LogShapeClass::Both,
                witness_index: None,
            },
            Kind::Degenerate { c } => LogShape {
                classification: LogShapeClass::LogConcave,
                witness_index: Some(u64::from(*c)),
            },
            Kind::NegativeBinomial { dispersion, .. } => {
                if (*dispersion - 1.0).abs() < 1e-14 {
                    LogShape {
                        classification: LogShapeClass::Both,
                        witness_index: None,
                    }
                } else if *dispersion > 1.0 {
                    LogShape {
                        classification: LogShapeClass::LogConcave,
                        witness_index: Some(1),
                    }
                } else {
                    LogShape {
                        classification: LogShapeClass::LogConvex,
                        witness_index: Some(1),
                    }
                }
            }
            Kind::GeometricMixture { weights, ps } => {
                let distinct = distinct_components(weights, ps);
                if distinct < 2 {
                    LogShape {
                        classification: LogShapeClass::Both,
                        witness_index: None,
                    }
                } else {
                    // strictly log-convex; find the first strict witness
                    let mut witness = None;
                    for k in 1..support_bound.max(2) {
                        let mid = self.pmf(k);
                        if mid * mid < self.pmf(k - 1) * self.pmf(k + 1) {
                            witness = Some(k);
                            break;
                        }
                    }
                    LogShape {
                        classification: LogShapeClass::LogConvex,
                        witness_index: witness,
                    }
                }
            }
            Kind::FiniteSupport { weights } => classify_table(weights),
        }
    }

    /// Draw one clump size.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.kind {
            Kind::Degenerate { c } => u64::from(*c),
            Kind::Geometric { p } => sample_geometric(*p, rng),
            Kind::NegativeBinomial { mean, dispersion } => {
                // gamma-mixed Poisson
                let gamma = rand_distr::Gamma::new(*dispersion, mean / dispersion)
                    .expect("valid gamma parameters");
                let rate: f64 = gamma.sample(rng);
                if rate <= 0.0 {
                    return 0;
                }
                let pois = rand_distr::Poisson::new(rate).expect("valid poisson rate");
                let x: f64 = pois.sample(rng);
                x as u64
            }
            Kind::Poisson { mean } => {
                let pois = rand_distr::Poisson::new(*mean).expect("valid poisson rate");
                let x: f64 = pois.sample(rng);
                x as u64
            }
            Kind::FiniteSupport { weights } => {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    cum += w;
                    if u < cum {
                        return k as u64;
                    }
                }
                (weights.len() - 1) as u64
            }
            Kind::GeometricMixture { weights, ps } => {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for (w, p) in weights.iter().zip(ps) {
                    cum += w;
                    if u < cum {
                        return sample_geometric(*p, rng);
                    }
                }
                sample_geometric(*ps.last().expect("nonempty mixture"), rng)
            }
        }
    }
}

fn geometric_pmf(p: f64, k: u64) -> f64 {
    p * (1.0 - p).powi(saturating_i32(k))
}

fn saturating_i32(k: u64) -> i32 {
    k.min(i32::MAX as u64) as i32
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn distinct_components(weights: &[f64], ps: &[f64]) -> usize {
    let mut distinct: Vec<f64> = Vec::new();
    for (w, p) in weights.iter().zip(ps) {
        if *w > 0.0 && !distinct.iter().any(|d| (d - p).abs() < 1e-14) {
            distinct.push(*p);
        }
    }
    distinct.len()
}

fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let r = (1.0 - u).ln() / (1.0 - p).ln();
    let k = r.ceil() - 1.0;
    if k <= 0.0 {
        0
    } else {
        k as u64
    }
}

fn classify_table(weights: &[f64]) -> LogShape {
    let lo = weights.iter().position(|w| *w > 0.0).unwrap_or(0);
    let hi = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    // interior zero between positive masses breaks the ratio argument
    if let Some(k) = (lo + 1..hi).find(|k| weights[*k] == 0.0) {
        return LogShape {
            classification: LogShapeClass::Neither,
            witness_index: Some(k as u64),
        };
    }
    let mut concave = true;
    let mut convex = true;
    let mut first_concave_fail = None;
    let mut first_convex_fail = None;
    for k in 1..hi {
        let lhs = weights[k] * weights[k];
        let rhs = weights[k - 1] * weights[k + 1];
        let tie = (lhs - rhs).abs() <= 1e-14 * lhs.max(rhs).max(1e-300);
        if tie {
            continue;
        }
        if lhs < rhs {
            concave = false;
            first_concave_fail.get_or_insert(k as u64);
        } else {
            convex = false;
            first_convex_fail.get_or_insert(k as u64);
        }
    }
    let classification = match (concave, convex) {
        (true, true) => LogShapeClass::Both,
        (true, false) => LogShapeClass::LogConcave,
        (false, true) => LogShapeClass::LogConvex,
        (false, false) => LogShapeClass::Neither,
    };
    let witness_index = match classification {
        LogShapeClass::Both => None,
        LogShapeClass::LogConcave => first_convex_fail,
        LogShapeClass::LogConvex => first_concave_fail,
        LogShapeClass::Neither => first_concave_fail.or(first_convex_fail),
    };
    LogShape {
        classification,
        witness_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_tail(c: &ClumpDistribution, j: u64, bound: u64) -> f64 {
        (j + 1..=bound).map(|k| c.pmf(k)).sum()
    }

    #[test]
    fn pmf_closed_forms() {
        let g = ClumpDistribution::geometric(0.5).unwrap();
        assert!((g.pmf(2) - 0.125).abs() < 1e-15);

        let d = ClumpDistribution::degenerate(1).unwrap();
        assert_eq!(d.pmf(1), 1.0);
        assert_eq!(d.pmf(0), 0.0);

        let f = ClumpDistribution::finite_support(vec![0.3, 0.4, 0.3]).unwrap();
        assert_eq!(f.pmf(1), 0.4);
        assert_eq!(f.pmf(5), 0.0);
    }

    #[test]
    fn pgf_values() {
        let d = ClumpDistribution::degenerate(1).unwrap();
        assert_eq!(d.pgf(0.37).unwrap(), 0.37);

        let g = ClumpDistribution::geometric(0.5).unwrap();
        assert!((g.pgf(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        for c in [
            ClumpDistribution::poisson(4.0).unwrap(),
            ClumpDistribution::negative_binomial(1.0, 0.4).unwrap(),
            ClumpDistribution::geometric_mixture(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap(),
        ] {
            assert!((c.pgf(1.0).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(g.pgf(1.5).is_err());
        assert!(g.pgf(-0.1).is_err());
    }

    #[test]
    fn pgf_matches_series() {
        // complex PGF against direct series summation
        let cases = [
            ClumpDistribution::geometric(0.3).unwrap(),
            ClumpDistribution::negative_binomial(2.0, 0.7).unwrap(),
            ClumpDistribution::poisson(3.0).unwrap(),
            ClumpDistribution::geometric_mixture(vec![0.4, 0.6], vec![0.25, 0.7]).unwrap(),
        ];
        let z = Complex64::new(0.4, 0.3);
        for c in &cases {
            let bound = c.truncate(1e-16).unwrap();
            let mut series = Complex64::new(0.0, 0.0);
            for k in (0..=bound).rev() {
                series = series * z + c.pmf(k);
            }
            let err = (c.pgf_complex(z) - series).norm();
            assert!(err < 1e-12, "series mismatch {err} for {c:?}");
        }
    }

    #[test]
    fn derivative_closed_forms() {
        let d = ClumpDistribution::degenerate(1).unwrap();
        assert_eq!(d.pgf_deriv(1.0, 1).unwrap(), 1.0);

        let nb = ClumpDistribution::negative_binomial(1.0, 1.0).unwrap();
        assert!((nb.pgf_deriv(1.0, 1).unwrap() - 1.0).abs() < 1e-14);

        let p = ClumpDistribution::poisson(4.0).unwrap();
        assert!((p.pgf_deriv(1.0, 2).unwrap() - 16.0).abs() < 1e-12);

        assert!(p.pgf_deriv(0.5, 3).is_err());
    }

    #[test]
    fn first_derivative_matches_finite_differences() {
        let cases = [
            ClumpDistribution::degenerate(3).unwrap(),
            ClumpDistribution::geometric(0.5).unwrap(),
            ClumpDistribution::negative_binomial(2.0, 0.4).unwrap(),
            ClumpDistribution::poisson(4.0).unwrap(),
            ClumpDistribution::finite_support(vec![0.3, 0.4, 0.3]).unwrap(),
            ClumpDistribution::geometric_mixture(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap(),
        ];
        let h = 1e-6;
        for c in &cases {
            for i in 1..=9 {
                let z = 0.1 * f64::from(i);
                let fd = (c.pgf(z + h).unwrap() - c.pgf(z - h).unwrap()) / (2.0 * h);
                let exact = c.pgf_deriv(z, 1).unwrap();
                assert!(
                    (fd - exact).abs() < 1e-6 * exact.max(1.0),
                    "finite difference off at z={z} for {c:?}: {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn tail_beta_closed_forms() {
        let g = ClumpDistribution::geometric(0.5).unwrap();
        assert!((g.tail_beta(1) - 0.25).abs() < 1e-15);

        let d = ClumpDistribution::degenerate(1).unwrap();
        assert_eq!(d.tail_beta(0), 1.0);
        assert_eq!(d.tail_beta(1), 0.0);

        let f = ClumpDistribution::finite_support(vec![0.3, 0.4, 0.3]).unwrap();
        assert!((f.tail_beta(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tail_beta_matches_brute_force() {
        let cases = [
            ClumpDistribution::geometric(0.35).unwrap(),
            ClumpDistribution::negative_binomial(2.0, 0.4).unwrap(),
            ClumpDistribution::negative_binomial(1.0, 3.0).unwrap(),
            ClumpDistribution::poisson(4.0).unwrap(),
            ClumpDistribution::geometric_mixture(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap(),
            ClumpDistribution::finite_support(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        ];
        for c in &cases {
            let bound = c.truncate(1e-15).unwrap();
            for j in 0..12 {
                let brute = brute_tail(c, j, bound + 8);
                assert!(
                    (c.tail_beta(j) - brute).abs() < 1e-12,
                    "tail mismatch at j={j} for {c:?}: {} vs {brute}",
                    c.tail_beta(j)
                );
            }
        }
    }

    #[test]
    fn tail_sums_recover_mean() {
        // sum_j beta_j = E[C]
        for c in [
            ClumpDistribution::geometric(0.5).unwrap(),
            ClumpDistribution::poisson(4.0).unwrap(),
            ClumpDistribution::negative_binomial(2.0, 0.7).unwrap(),
            ClumpDistribution::finite_support(vec![0.3, 0.4, 0.3]).unwrap(),
        ] {
            let bound = c.truncate(1e-14).unwrap();
            let total: f64 = (0..=bound).map(|j| c.tail_beta(j)).sum();
            assert!(
                (total - c.mean()).abs() < 1e-10,
                "tail-sum formula off for {c:?}: {total} vs {}",
                c.mean()
            );
        }
    }

    #[test]
    fn truncate_is_smallest_bound() {
        let c = ClumpDistribution::poisson(4.0).unwrap();
        let b = c.truncate(1e-10).unwrap();
        assert!(c.tail_beta(b) < 1e-10);
        assert!(c.tail_beta(b - 1) >= 1e-10);

        let d = ClumpDistribution::degenerate(7).unwrap();
        assert_eq!(d.truncate(1e-12).unwrap(), 7);
    }

    #[test]
    fn log_shape_classification() {
        let p = ClumpDistribution::poisson(4.0).unwrap();
        assert_eq!(
            p.classify_log_shape(64).classification,
            LogShapeClass::LogConcave
        );

        let g = ClumpDistribution::geometric(0.5).unwrap();
        assert_eq!(g.classify_log_shape(64).classification, LogShapeClass::Both);

        let f = ClumpDistribution::finite_support(vec![0.5, 0.1, 0.4]).unwrap();
        let shape = f.classify_log_shape(8);
        assert_eq!(shape.classification, LogShapeClass::LogConvex);
        assert_eq!(shape.witness_index, Some(1));

        let mix =
            ClumpDistribution::geometric_mixture(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap();
        assert_eq!(
            mix.classify_log_shape(64).classification,
            LogShapeClass::LogConvex
        );

        // binomial-like table is log-concave
        let binomish = ClumpDistribution::finite_support(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(
            binomish.classify_log_shape(8).classification,
            LogShapeClass::LogConcave
        );

        // interior zero with mass on both sides
        let holed = ClumpDistribution::finite_support(vec![0.5, 0.0, 0.5]).unwrap();
        let shape = holed.classify_log_shape(8);
        assert_eq!(shape.classification, LogShapeClass::Neither);
        assert_eq!(shape.witness_index, Some(1));
    }

    #[test]
    fn mixture_pmf_is_log_convex_numerically() {
        let mix =
            ClumpDistribution::geometric_mixture(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap();
        for k in 1..40u64 {
            let lhs = mix.pmf(k) * mix.pmf(k);
            let rhs = mix.pmf(k - 1) * mix.pmf(k + 1);
            assert!(lhs <= rhs * (1.0 + 1e-12), "not log-convex at k={k}");
        }
    }

    #[test]
    fn construction_rejects_degenerate_at_zero() {
        assert!(ClumpDistribution::degenerate(0).is_err());
        assert!(ClumpDistribution::geometric(1.0).is_err());
        assert!(ClumpDistribution::finite_support(vec![1.0]).is_err());
        assert!(ClumpDistribution::finite_support(vec![0.5, 0.4]).is_err());
        assert!(ClumpDistribution::negative_binomial(0.0, 1.0).is_err());
        assert!(ClumpDistribution::poisson(-1.0).is_err());
    }

    #[test]
    fn sampling_matches_mean() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for c in [
            ClumpDistribution::geometric(0.5).unwrap(),
            ClumpDistribution::poisson(2.0).unwrap(),
            ClumpDistribution::negative_binomial(1.5, 0.8).unwrap(),
            ClumpDistribution::finite_support(vec![0.3, 0.4, 0.3]).unwrap(),
            ClumpDistribution::geometric_mixture(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap(),
        ] {
            let n = 200_000;
            let total: u64 = (0..n).map(|_| c.sample(&mut rng)).sum();
            let mean = total as f64 / n as f64;
            let want = c.mean();
            // 5 sigma on the sample mean
            let sd = (want + want * want).sqrt();
            assert!(
                (mean - want).abs() < 5.0 * sd / (n as f64).sqrt(),
                "sample mean {mean} too far from {want} for {c:?}"
            );
        }
    }
}
