//! Numerical inversion of a probability generating function to a
//! truncated pmf.
//!
//! The pmf entries are Fourier coefficients of the PGF on a circle of
//! radius `r < 1`: sampling `2n` points and forming the damped sums
//! `p(k) = (2n r^k)^{-1} sum_m G(r e^{i pi m / n}) e^{-i pi m k / n}`
//! leaves an aliasing error of `r^{2n} / (1 - r^{2n})`, so `r` is chosen
//! with `r^{2n} = 0.1 * target_error`. The grid is oversampled to four
//! points per coefficient so the `r^{-k}` growth cannot amplify PGF
//! evaluation error past the target. Conjugate symmetry halves the
//! evaluations, which run in parallel under the `parallel` feature; the
//! final reductions use a fixed order, so results do not depend on the
//! schedule.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{kahan_sum, KahanSum};
use crate::par::map_indexed;

/// Hard cap on the truncation search in [`choose_k_max`].
pub const K_MAX_CAP: u64 = 1_000_000;

/// A finite distribution on `{0, 1, ..., K}` with a certified bound on the
/// mass beyond `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    mass: Vec<f64>,
    tail_bound: f64,
}

impl Pmf {
    /// Wrap explicit masses. Entries must be nonnegative and
    /// `sum + tail_bound` must be 1 within 1e-9.
    pub fn new(mass: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidParameter("empty pmf".into()));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidParameter(
                "pmf entries must be finite and >= 0".into(),
            ));
        }
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail bound {tail_bound} must be finite and >= 0"
            )));
        }
        let total = kahan_sum(mass.iter().copied()) + tail_bound;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "pmf mass + tail = {total}, expected 1 within 1e-9"
            )));
        }
        Ok(Self { mass, tail_bound })
    }

    /// Normalize nonnegative weights into an exact pmf (zero tail).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be nonempty, finite and >= 0".into(),
            ));
        }
        let total = kahan_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidParameter("weights sum to zero".into()));
        }
        let mass = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            mass,
            tail_bound: 0.0,
        })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass at `k`; zero beyond the truncation point.
    pub fn get(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.mass.iter().copied())
    }

    /// Mean of the distribution conditioned on the truncated support.
    pub fn mean(&self) -> f64 {
        let total = self.total_mass();
        let mut acc = KahanSum::new();
        for (k, m) in self.mass.iter().enumerate() {
            acc.add(k as f64 * m);
        }
        acc.value() / total
    }

    pub fn variance(&self) -> f64 {
        let total = self.total_mass();
        let mean = self.mean();
        let mut acc = KahanSum::new();
        for (k, m) in self.mass.iter().enumerate() {
            let d = k as f64 - mean;
            acc.add(d * d * m);
        }
        acc.value() / total
    }

    pub fn cv(&self) -> f64 {
        self.variance().sqrt() / self.mean()
    }

    pub fn vmr(&self) -> f64 {
        self.variance() / self.mean()
    }

    /// PGF of the truncated pmf (raw masses, Horner form).
    pub fn pgf_at(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &m in self.mass.iter().rev() {
            acc = acc * z + m;
        }
        acc
    }

    /// Total-variation distance between the normalized pmfs, charging each
    /// truncation tail in full.
    pub fn tv_distance(&self, other: &Pmf) -> f64 {
        let tp = self.total_mass();
        let tq = other.total_mass();
        let len = self.len().max(other.len());
        let mut acc = KahanSum::new();
        for k in 0..len {
            acc.add((self.get(k) / tp - other.get(k) / tq).abs());
        }
        0.5 * (acc.value() + self.tail_bound + other.tail_bound)
    }
}

/// A PGF presented as an evaluator on the closed unit disk, with optional
/// metadata used to seed truncation searches and consistency checks.
pub struct PgfEvaluator<'a> {
    f: Box<dyn Fn(Complex64) -> Result<Complex64> + Sync + 'a>,
    known_mean: Option<f64>,
    known_support_bound: Option<u64>,
}

impl<'a> PgfEvaluator<'a> {
    /// Wrap an evaluator; rejects it unless `G(1) = 1` within 1e-10.
    pub fn new<F>(f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<Complex64> + Sync + 'a,
    {
        let at_one = f(Complex64::new(1.0, 0.0))?;
        if (at_one - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "PGF evaluator has G(1) = {at_one}, expected 1 within 1e-10"
            )));
        }
        Ok(Self {
            f: Box::new(f),
            known_mean: None,
            known_support_bound: None,
        })
    }

    pub fn with_known_mean(mut self, mean: f64) -> Self {
        self.known_mean = Some(mean);
        self
    }

    pub fn with_support_bound(mut self, bound: u64) -> Self {
        self.known_support_bound = Some(bound);
        self
    }

    /// Polynomial evaluator of a finite pmf (normalized so `G(1) = 1`).
    pub fn from_pmf(pmf: &'a Pmf) -> Result<Self> {
        let total = pmf.total_mass() + pmf.tail_bound();
        let bound = (pmf.len() - 1) as u64;
        let mean = pmf.mean();
        Ok(Self {
            f: Box::new(move |z| Ok(pmf.pgf_at(z) / total + pmf.tail_bound() / total)),
            known_mean: Some(mean),
            known_support_bound: Some(bound),
        })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        (self.f)(z)
    }

    pub fn known_mean(&self) -> Option<f64> {
        self.known_mean
    }

    pub fn known_support_bound(&self) -> Option<u64> {
        self.known_support_bound
    }
}

/// Budget allowed for clamped negative round-off mass per inversion.
const CLAMP_BUDGET: f64 = 1e-10;

/// Recover `p(0..=k_max)` from a PGF evaluator, with per-entry error at
/// most `target_error` (aliasing plus damped evaluation error).
pub fn invert(g: &PgfEvaluator, k_max: u64, target_error: f64) -> Result<Pmf> {
    if !(target_error.is_finite() && target_error >= 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "target_error = {target_error} must be >= 1e-12"
        )));
    }
    if k_max > K_MAX_CAP {
        return Err(Error::TruncationOverflow { cap: K_MAX_CAP });
    }

    // oversample: 2n >= 4 (k_max + 1), n a power of two, at least 64
    let needed = 2 * (k_max + 1);
    let mut n: u64 = 64;
    while n < needed {
        n *= 2;
    }
    let n = n as usize;
    let r = (0.1 * target_error).powf(1.0 / (2.0 * n as f64));

    // PGF on the upper half circle; conjugate symmetry supplies the rest
    let evals: Vec<Result<Complex64>> = map_indexed(n + 1, |m| {
        let theta = std::f64::consts::PI * m as f64 / n as f64;
        g.eval(Complex64::from_polar(r, theta))
    });
    let mut ring = Vec::with_capacity(n + 1);
    for e in evals {
        ring.push(e?);
    }

    // twiddle table: w[t] = e^{-i pi t / n}, indexed mod 2n
    let twiddle: Vec<Complex64> = (0..2 * n)
        .map(|t| Complex64::from_polar(1.0, -std::f64::consts::PI * t as f64 / n as f64))
        .collect();

    let mut mass = Vec::with_capacity((k_max + 1) as usize);
    let mut clamped = 0.0;
    let mut total = KahanSum::new();
    for k in 0..=k_max as usize {
        let mut acc = KahanSum::new();
        acc.add(ring[0].re);
        let half_turn = if k % 2 == 0 { ring[n].re } else { -ring[n].re };
        acc.add(half_turn);
        for (m, val) in ring.iter().enumerate().take(n).skip(1) {
            let t = (m * k) % (2 * n);
            acc.add(2.0 * (val * twiddle[t]).re);
        }
        let mut p = acc.value() / (2.0 * n as f64 * r.powi(k as i32));
        if p < 0.0 {
            clamped -= p;
            p = 0.0;
        }
        total.add(p);
        mass.push(p);
    }

    if clamped > CLAMP_BUDGET {
        return Err(Error::NegativeMass { clamped });
    }

    let tail_bound = (1.0 - total.value()).max(0.0);
    Pmf::new(mass, tail_bound)
}

/// Smallest `K` with cumulative inverted mass `>= 1 - mass_tol`, found by
/// geometric growth of the inversion window and a prefix search.
pub fn choose_k_max(g: &PgfEvaluator, mass_tol: f64) -> Result<u64> {
    if !(mass_tol.is_finite() && mass_tol > 0.0 && mass_tol <= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "mass_tol = {mass_tol} must lie in (0, 1e-3]"
        )));
    }
    let probe_error = (0.01 * mass_tol).max(1e-12);
    let mut k: u64 = match (g.known_support_bound(), g.known_mean()) {
        (Some(bound), _) => bound.max(1),
        (None, Some(mean)) => ((8.0 * mean).ceil() as u64).max(16),
        (None, None) => 32,
    };

    loop {
        let pmf = invert(g, k, probe_error)?;
        let mut cum = KahanSum::new();
        for (idx, m) in pmf.mass().iter().enumerate() {
            cum.add(*m);
            if cum.value() >= 1.0 - mass_tol {
                return Ok(idx as u64);
            }
        }
        if k >= K_MAX_CAP {
            return Err(Error::TruncationOverflow { cap: K_MAX_CAP });
        }
        k = (k * 2).min(K_MAX_CAP);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::ln_gamma;

    fn poisson_pmf(m: f64, k: usize) -> f64 {
        (-m + k as f64 * m.ln() - ln_gamma(k as f64 + 1.0)).exp()
    }

    fn nb_pmf(mean: f64, nu: f64, k: usize) -> f64 {
        let b = mean / nu;
        let q = b / (1.0 + b);
        (ln_gamma(nu + k as f64) - ln_gamma(nu) - ln_gamma(k as f64 + 1.0)
            + nu * (1.0 - q).ln()
            + k as f64 * q.ln())
        .exp()
    }

    #[test]
    fn point_mass_at_one() {
        let g = PgfEvaluator::new(Ok).unwrap();
        let pmf = invert(&g, 4, 1e-10).unwrap();
        assert!(pmf.get(0).abs() < 1e-10);
        assert!((pmf.get(1) - 1.0).abs() < 1e-10);
        assert!(pmf.get(2).abs() < 1e-10);
        assert!(pmf.tail_bound() < 1e-9);
        assert_eq!(choose_k_max(&g, 1e-9).unwrap(), 1);
    }

    #[test]
    fn poisson_pgf_inverts_to_poisson_pmf() {
        let m = 2.5;
        let g = PgfEvaluator::new(move |z| Ok((m * (z - 1.0)).exp()))
            .unwrap()
            .with_known_mean(m);
        let pmf = invert(&g, 25, 1e-10).unwrap();
        for k in 0..=20 {
            assert!(
                (pmf.get(k) - poisson_pmf(m, k)).abs() < 1e-10,
                "k={k}: {} vs {}",
                pmf.get(k),
                poisson_pmf(m, k)
            );
        }
        let k = choose_k_max(&g, 1e-9).unwrap();
        assert!((15..=25).contains(&k), "k = {k} outside expected window");
    }

    #[test]
    fn negative_binomial_pgf_inverts() {
        let (mean, nu) = (5.0 / 3.0, 5.0 / 3.0);
        let b = mean / nu;
        let g = PgfEvaluator::new(move |z| {
            Ok((Complex64::new(1.0, 0.0) + b * (Complex64::new(1.0, 0.0) - z)).powf(-nu))
        })
        .unwrap()
        .with_known_mean(mean);
        let k_max = choose_k_max(&g, 1e-10).unwrap();
        let pmf = invert(&g, k_max, 1e-10).unwrap();
        for k in 0..=k_max as usize {
            assert!(
                (pmf.get(k) - nb_pmf(mean, nu, k)).abs() < 1e-9,
                "k={k}: {} vs {}",
                pmf.get(k),
                nb_pmf(mean, nu, k)
            );
        }
        // truncation point consistent with the NB tail
        let tail: f64 = 1.0 - (0..=k_max as usize).map(|k| nb_pmf(mean, nu, k)).sum::<f64>();
        assert!(tail < 1e-10 * 1.5);
    }

    #[test]
    fn moment_consistency_with_metadata() {
        let m = 2.5;
        let g = PgfEvaluator::new(move |z| Ok((m * (z - 1.0)).exp()))
            .unwrap()
            .with_known_mean(m);
        let k = choose_k_max(&g, 1e-10).unwrap();
        let pmf = invert(&g, k, 1e-10).unwrap();
        assert!((pmf.mean() - m).abs() < 1e-6 * m);
        assert!((pmf.variance() - m).abs() < 1e-5 * m);
    }

    #[test]
    fn evaluator_rejects_improper_pgf() {
        assert!(PgfEvaluator::new(|z| Ok(z * 0.99)).is_err());
        let g = PgfEvaluator::new(Ok).unwrap();
        assert!(invert(&g, 4, 1e-13).is_err());
    }

    #[test]
    fn heavy_tail_reported_in_tail_bound() {
        // inverting far too short a window leaves the deficit in tail_bound
        let (mean, nu) = (10.0, 0.8);
        let b = mean / nu;
        let g = PgfEvaluator::new(move |z| {
            Ok((Complex64::new(1.0, 0.0) + b * (Complex64::new(1.0, 0.0) - z)).powf(-nu))
        })
        .unwrap();
        let pmf = invert(&g, 3, 1e-10).unwrap();
        assert!(pmf.tail_bound() > 1e-6, "tail {}", pmf.tail_bound());
    }

    #[test]
    fn round_trip_recovers_finite_pmf() {
        let original =
            Pmf::from_weights(vec![0.05, 0.15, 0.3, 0.2, 0.1, 0.1, 0.05, 0.05]).unwrap();
        let g = PgfEvaluator::from_pmf(&original).unwrap();
        let recovered = invert(&g, 7, 1e-10).unwrap();
        for k in 0..8 {
            assert!(
                (recovered.get(k) - original.get(k)).abs() < 1e-10,
                "k={k}: {} vs {}",
                recovered.get(k),
                original.get(k)
            );
        }
    }

    #[test]
    fn tv_distance_basics() {
        let p = Pmf::from_weights(vec![0.5, 0.5]).unwrap();
        let q = Pmf::from_weights(vec![0.25, 0.75]).unwrap();
        assert!((p.tv_distance(&q) - 0.25).abs() < 1e-15);
        assert_eq!(p.tv_distance(&p), 0.0);
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.5, 0.4], 0.0).is_err());
        assert!(Pmf::new(vec![0.5, -0.1, 0.6], 0.0).is_err());
        assert!(Pmf::new(vec![0.5, 0.4], 0.1).is_ok());
        assert!(Pmf::from_weights(vec![0.0, 0.0]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            // round trip through pgf_of -> invert is the identity within 1e-10
            #[test]
            fn invert_round_trip(weights in proptest::collection::vec(0.0f64..1.0, 2..12)) {
                prop_assume!(weights.iter().sum::<f64>() > 0.1);
                let pmf = Pmf::from_weights(weights).unwrap();
                let g = PgfEvaluator::from_pmf(&pmf).unwrap();
                let back = invert(&g, (pmf.len() - 1) as u64, 1e-10).unwrap();
                for k in 0..pmf.len() {
                    prop_assert!((back.get(k) - pmf.get(k)).abs() < 1e-10);
                }
            }

            // inverted masses are a sub-probability vector summing to <= 1
            #[test]
            fn inverted_mass_is_subprobability(mean in 0.2f64..8.0) {
                let g = PgfEvaluator::new(move |z: Complex64| Ok((mean * (z - 1.0)).exp()))
                    .unwrap();
                let pmf = invert(&g, 40, 1e-10).unwrap();
                prop_assert!(pmf.mass().iter().all(|m| *m >= 0.0));
                prop_assert!(pmf.total_mass() <= 1.0 + 1e-9);
            }
        }
    }
}
