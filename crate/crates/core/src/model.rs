//! Model parameters and the analytic layer: equilibrium and transient
//! PGFs of the surviving host's parasite load, closed-form moments and
//! aggregation ratios, and the full per-parameter-set report.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clump::ClumpDistribution;
use crate::error::{Error, Result};
use crate::inversion::{choose_k_max, invert, PgfEvaluator, Pmf};
use crate::orders::{gini, lorenz_curve, pietra, LorenzCurve};
use crate::quad::integrate_segment;

const QUAD_ABS_TOL: f64 = 1e-12;
const QUAD_MAX_SPLITS: usize = 400;

// 16-point Gauss-Legendre nodes/weights mapped to [0, 1]; used to average
// the PGF derivative across the short segment where the ratio form of the
// integrand would cancel catastrophically.
#[allow(clippy::excessive_precision)]
const GL16_NODES: [f64; 16] = [
    0.005299532504175031, 0.027712488463383712, 0.06718439880608412, 0.12229779582249845,
    0.19106187779867811, 0.27099161117138630, 0.35919822461037054, 0.45249374508118123,
    0.54750625491881877, 0.64080177538962946, 0.72900838882861370, 0.80893812220132189,
    0.87770220417750155, 0.93281560119391588, 0.97228751153661629, 0.99470046749582497,
];
#[allow(clippy::excessive_precision)]
const GL16_WEIGHTS: [f64; 16] = [
    0.013576229705877047, 0.031126761969323946, 0.047579255841246392, 0.062314485627766936,
    0.074797994408288367, 0.084578259697501269, 0.091301707522461794, 0.094725305227534248,
    0.094725305227534248, 0.091301707522461794, 0.084578259697501269, 0.074797994408288367,
    0.062314485627766936, 0.047579255841246392, 0.031126761969323946, 0.013576229705877047,
];

/// Model parameters: contact rate, per-parasite host mortality increment,
/// per-parasite death rate, and the clump-size distribution.
///
/// Baseline (load-independent) host mortality is deliberately absent: it
/// multiplies every path's survival probability by the same factor and
/// cancels from the conditional law of the load given survival.
#[derive(Debug, Clone, Serialize)]
pub struct ModelParams {
    phi: f64,
    alpha: f64,
    mu_m: f64,
    clump: ClumpDistribution,
}

impl ModelParams {
    pub fn new(phi: f64, alpha: f64, mu_m: f64, clump: ClumpDistribution) -> Result<Self> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::InvalidParameter(format!("phi = {phi} must be > 0")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be >= 0")));
        }
        if !(mu_m.is_finite() && mu_m >= 0.0) {
            return Err(Error::InvalidParameter(format!("mu_m = {mu_m} must be >= 0")));
        }
        if alpha + mu_m <= 0.0 {
            return Err(Error::InvalidParameter(
                "alpha + mu_m must be > 0".into(),
            ));
        }
        Ok(Self {
            phi,
            alpha,
            mu_m,
            clump,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu_m(&self) -> f64 {
        self.mu_m
    }

    pub fn clump(&self) -> &ClumpDistribution {
        &self.clump
    }

    /// Same parameters with a different contact rate.
    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(phi, self.alpha, self.mu_m, self.clump.clone())
    }

    /// `lambda = mu_m / (alpha + mu_m)`; exactly 1 when `alpha == 0`.
    pub fn lambda(&self) -> f64 {
        if self.alpha == 0.0 {
            1.0
        } else {
            self.mu_m / (self.alpha + self.mu_m)
        }
    }

    fn rate_coefficient(&self) -> f64 {
        self.phi / (self.alpha + self.mu_m)
    }
}

/// Evaluator of the equilibrium-exponent integrand
/// `u -> (G_C(lambda) - G_C(u)) / (u - lambda)`, extended by continuity
/// across `u = lambda`: within a small window the removable singularity is
/// evaluated as the averaged derivative `-mean of G_C' over [lambda, u]`
/// (16-point Gauss-Legendre), which is exact to machine precision for the
/// analytic PGFs used here.
struct Integrand<'a> {
    clump: &'a ClumpDistribution,
    lambda: f64,
    g_lambda: f64,
    window: f64,
}

impl<'a> Integrand<'a> {
    fn new(params: &'a ModelParams) -> Result<Self> {
        let lambda = params.lambda();
        let g_lambda = params.clump.pgf(lambda)?;
        let dist = params.clump.singularity_distance(lambda);
        let window = (0.1 * dist).min(0.01);
        Ok(Self {
            clump: &params.clump,
            lambda,
            g_lambda,
            window,
        })
    }

    fn eval(&self, u: Complex64) -> Complex64 {
        let lam = Complex64::new(self.lambda, 0.0);
        let d = u - lam;
        if d.norm() < self.window {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, w) in GL16_NODES.iter().zip(&GL16_WEIGHTS) {
                acc += *w * self.clump.pgf_deriv_complex(lam + d * *t);
            }
            -acc
        } else {
            (self.g_lambda - self.clump.pgf_complex(u)) / d
        }
    }
}

/// Equilibrium PGF of the surviving host's load, at complex `z` inside the
/// closed unit disk. Used by the numerical inversion layer.
pub fn equilibrium_pgf_complex(params: &ModelParams, z: Complex64) -> Result<Complex64> {
    let integrand = Integrand::new(params)?;
    let one = Complex64::new(1.0, 0.0);
    let (integral, _err) = integrate_segment(
        |u| integrand.eval(u),
        z,
        one,
        QUAD_ABS_TOL,
        QUAD_MAX_SPLITS,
    )?;
    Ok((params.rate_coefficient() * integral).exp())
}

/// Equilibrium PGF at real `z` in `[0, 1]`. Exactly 1 at `z = 1`.
pub fn equilibrium_pgf(params: &ModelParams, z: f64) -> Result<f64> {
    check_unit_interval("z", z)?;
    Ok(equilibrium_pgf_complex(params, Complex64::new(z, 0.0))?.re)
}

/// PGF of the load of a host observed at age `a`, conditional on survival.
///
/// Uses the boundary map `theta(a; z) = lambda + (z - lambda) e^{-(alpha+mu_m) a}`,
/// which satisfies `theta(0; z) = z` (a newborn host is parasite-free, so
/// the PGF is 1) and `theta(a; z) -> lambda` as `a` grows, recovering
/// [`equilibrium_pgf`]. The two boundary integrals are taken with the same
/// analytically extended integrand and subtracted, so their logarithmic
/// endpoint contributions cancel exactly; the form is validated against
/// the Monte Carlo oracle.
pub fn transient_pgf(params: &ModelParams, age: f64, z: f64) -> Result<f64> {
    if !(age.is_finite() && age >= 0.0) {
        return Err(Error::InvalidParameter(format!("age = {age} must be >= 0")));
    }
    check_unit_interval("z", z)?;
    let lambda = params.lambda();
    let decay = (-(params.alpha + params.mu_m) * age).exp();
    let theta_one = lambda + (1.0 - lambda) * decay;
    let theta_z = lambda + (z - lambda) * decay;

    let integrand = Integrand::new(params)?;
    let (i_one, _) = integrate_segment(
        |u| integrand.eval(u),
        Complex64::new(theta_one, 0.0),
        Complex64::new(1.0, 0.0),
        QUAD_ABS_TOL,
        QUAD_MAX_SPLITS,
    )?;
    let (i_z, _) = integrate_segment(
        |u| integrand.eval(u),
        Complex64::new(theta_z, 0.0),
        Complex64::new(z, 0.0),
        QUAD_ABS_TOL,
        QUAD_MAX_SPLITS,
    )?;
    Ok((params.rate_coefficient() * (i_one - i_z)).re.exp())
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidParameter(format!("{name} = {x} not in [0, 1]")));
    }
    Ok(())
}

/// Variance-to-mean ratio of the equilibrium load, in closed form.
pub fn vmr(params: &ModelParams) -> Result<f64> {
    let c = &params.clump;
    if params.alpha == 0.0 {
        Ok(1.0 + c.pgf_deriv(1.0, 2)? / (2.0 * c.mean()))
    } else {
        let lambda = params.lambda();
        Ok(c.mean() / (1.0 - c.pgf(lambda)?) - params.mu_m / params.alpha)
    }
}

fn cv_squared(params: &ModelParams) -> Result<f64> {
    let c = &params.clump;
    let value = if params.alpha == 0.0 {
        let gp = c.mean();
        (params.mu_m / params.phi) * (gp + 0.5 * c.pgf_deriv(1.0, 2)?) / (gp * gp)
    } else {
        let lambda = params.lambda();
        let hole = 1.0 - c.pgf(lambda)?;
        params.alpha * c.mean() / (params.phi * hole * hole)
            - params.mu_m / (params.phi * hole)
    };
    if value < 0.0 {
        // cannot happen for valid parameters; a negative radicand means the
        // closed forms were fed something inconsistent
        return Err(Error::ConsistencyGate {
            what: "squared coefficient of variation".into(),
            got: value,
            want: 0.0,
            tol: 0.0,
        });
    }
    Ok(value)
}

/// Coefficient of variation of the equilibrium load, in closed form.
pub fn cv(params: &ModelParams) -> Result<f64> {
    Ok(cv_squared(params)?.sqrt())
}

/// Mean and variance of the equilibrium load, recovered from the closed
/// VMR and CV^2 forms (`mean = VMR / CV^2`, `variance = VMR * mean`);
/// differentiating the PGF numerically at `z = 1` is kept only as a test
/// cross-check because of cancellation there.
pub fn moments(params: &ModelParams) -> Result<(f64, f64)> {
    let vmr = vmr(params)?;
    let cv2 = cv_squared(params)?;
    let mean = vmr / cv2;
    Ok((mean, vmr * mean))
}

/// `P(load = 0)` at equilibrium: the PGF at 0. Also `1 - prevalence`.
pub fn prevalence_complement(params: &ModelParams) -> Result<f64> {
    equilibrium_pgf(params, 0.0)
}

/// Budgets for the inversion step of [`report`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InversionBudget {
    /// Truncation point is the smallest `K` with cumulative mass `>= 1 - mass_tol`.
    pub mass_tol: f64,
    /// Per-entry inversion error target.
    pub target_error: f64,
}

impl Default for InversionBudget {
    fn default() -> Self {
        Self {
            mass_tol: 1e-10,
            target_error: 1e-10,
        }
    }
}

/// Everything the analysis computes for one parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct AggregationReport {
    pub mean: f64,
    pub variance: f64,
    pub vmr: f64,
    pub cv: f64,
    pub prevalence_complement: f64,
    pub gini: f64,
    pub pietra: f64,
    pub lorenz: LorenzCurve,
    pub pmf: Pmf,
}

const MEAN_GATE_REL: f64 = 1e-6;
const CV_GATE_REL: f64 = 1e-5;

/// Full report: closed-form moments and ratios, the inverted pmf, and the
/// pmf-based indices, with consistency gates between the two routes.
pub fn report(params: &ModelParams, budget: &InversionBudget) -> Result<AggregationReport> {
    let (mean, variance) = moments(params)?;
    let vmr_value = vmr(params)?;
    let cv_value = cv(params)?;
    let prevalence = prevalence_complement(params)?;

    let evaluator = PgfEvaluator::new(|z| equilibrium_pgf_complex(params, z))?
        .with_known_mean(mean);
    let k_max = choose_k_max(&evaluator, budget.mass_tol)?;
    let pmf = invert(&evaluator, k_max, budget.target_error)?;

    gate("pmf mean", pmf.mean(), mean, MEAN_GATE_REL)?;
    gate("pmf cv", pmf.cv(), cv_value, CV_GATE_REL)?;

    let lorenz = lorenz_curve(&pmf)?;
    let gini_value = gini(&pmf)?;
    let pietra_value = pietra(&pmf)?;

    Ok(AggregationReport {
        mean,
        variance,
        vmr: vmr_value,
        cv: cv_value,
        prevalence_complement: prevalence,
        gini: gini_value,
        pietra: pietra_value,
        lorenz,
        pmf,
    })
}

fn gate(what: &str, got: f64, want: f64, rel_tol: f64) -> Result<()> {
    if (got - want).abs() > rel_tol * want.abs().max(1e-12) {
        return Err(Error::ConsistencyGate {
            what: what.into(),
            got,
            want,
            tol: rel_tol,
        });
    }
    Ok(())
}

/// A finite-support distribution over the contact rate, modelling
/// between-host heterogeneity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiMixture {
    phis: Vec<f64>,
    weights: Vec<f64>,
}

impl PhiMixture {
    pub fn new(phis: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if phis.len() != weights.len() || phis.is_empty() {
            return Err(Error::InvalidParameter(
                "phi mixture needs matching, nonempty value and weight lists".into(),
            ));
        }
        if phis.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::InvalidParameter("mixture phis must be > 0".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidParameter("mixture weights must be > 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { phis, weights })
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean_phi(&self) -> f64 {
        self.phis
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p * w)
            .sum()
    }

    /// Draw one contact rate.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for (p, w) in self.phis.iter().zip(&self.weights) {
            cum += w;
            if u < cum {
                return *p;
            }
        }
        *self.phis.last().expect("nonempty mixture")
    }
}

/// Report for a population whose contact rate is drawn per host from a
/// finite mixture: PGFs mix linearly, so the population pmf is the
/// weighted sum of the per-rate pmfs. Moment fields are computed from the
/// mixture pmf (there is no single-rate closed form for the mixture).
pub fn report_phi_mixture(
    params: &ModelParams,
    mixture: &PhiMixture,
    budget: &InversionBudget,
) -> Result<AggregationReport> {
    let per_phi: Vec<ModelParams> = mixture
        .phis
        .iter()
        .map(|&phi| params.with_phi(phi))
        .collect::<Result<_>>()?;
    let mut k_max = 0u64;
    for p in &per_phi {
        let (mean, _) = moments(p)?;
        let evaluator =
            PgfEvaluator::new(|z| equilibrium_pgf_complex(p, z))?.with_known_mean(mean);
        k_max = k_max.max(choose_k_max(&evaluator, budget.mass_tol)?);
    }

    let mut mass = vec![0.0; (k_max + 1) as usize];
    let mut tail = 0.0;
    let mut prevalence = 0.0;
    for (p, w) in per_phi.iter().zip(&mixture.weights) {
        let evaluator = PgfEvaluator::new(|z| equilibrium_pgf_complex(p, z))?;
        let pmf = invert(&evaluator, k_max, budget.target_error)?;
        for (k, m) in pmf.mass().iter().enumerate() {
            mass[k] += w * m;
        }
        tail += w * pmf.tail_bound();
        prevalence += w * prevalence_complement(p)?;
    }
    let pmf = Pmf::new(mass, tail)?;

    let mean = pmf.mean();
    let variance = pmf.variance();
    let lorenz = lorenz_curve(&pmf)?;

    Ok(AggregationReport {
        mean,
        variance,
        vmr: pmf.vmr(),
        cv: pmf.cv(),
        prevalence_complement: prevalence,
        gini: gini(&pmf)?,
        pietra: pietra(&pmf)?,
        lorenz,
        pmf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clump::ClumpDistribution;

    fn degenerate_params() -> ModelParams {
        ModelParams::new(5.0, 1.0, 1.0, ClumpDistribution::degenerate(1).unwrap()).unwrap()
    }

    fn nb11_params() -> ModelParams {
        ModelParams::new(
            5.0,
            1.0,
            1.0,
            ClumpDistribution::negative_binomial(1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn parameter_validation() {
        let c = ClumpDistribution::degenerate(1).unwrap();
        assert!(ModelParams::new(0.0, 1.0, 1.0, c.clone()).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0, c.clone()).is_err());
        assert!(ModelParams::new(1.0, -0.1, 1.0, c.clone()).is_err());
        let p = ModelParams::new(1.0, 0.0, 2.0, c).unwrap();
        assert_eq!(p.lambda(), 1.0);
    }

    #[test]
    fn equilibrium_degenerate_clump_is_poisson() {
        // point-mass clumps give a Poisson equilibrium with mean phi/(alpha+mu)
        let params = degenerate_params();
        let m = 2.5;
        for z in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let got = equilibrium_pgf(&params, z).unwrap();
            let want = (m * (z - 1.0)).exp();
            assert!(
                (got - want).abs() < 1e-12,
                "z={z}: {got} vs {want}"
            );
        }
        assert_eq!(equilibrium_pgf(&params, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn equilibrium_geometric_clump_is_negative_binomial() {
        let params = nb11_params();
        // closed form: NB(5/3, 5/3)
        let (m, nu) = (5.0 / 3.0, 5.0 / 3.0);
        let b = m / nu;
        for z in [0.0, 0.3, 0.6, 0.9] {
            let got = equilibrium_pgf(&params, z).unwrap();
            let want = (1.0 + b * (1.0 - z)).powf(-nu);
            assert!(
                (got - want).abs() < 1e-12,
                "z={z}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn equilibrium_frozen_reference_values() {
        // values computed independently with adaptive quadrature (scipy)
        let mix = ModelParams::new(
            2.0,
            0.1,
            0.9,
            ClumpDistribution::geometric_mixture(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap(),
        )
        .unwrap();
        for (z, want) in [
            (0.0, 0.2676135718194662),
            (0.3, 0.3546406978743695),
            (0.7, 0.5791341835865723),
        ] {
            let got = equilibrium_pgf(&mix, z).unwrap();
            assert!((got - want).abs() < 1e-9, "z={z}: {got} vs {want}");
        }

        // alpha = 0 branch (the integrand's removable point sits at u = 1)
        let poi = ModelParams::new(3.0, 0.0, 2.0, ClumpDistribution::poisson(4.0).unwrap())
            .unwrap();
        for (z, want) in [(0.0, 0.0522908399480851), (0.5, 0.1382218834074779)] {
            let got = equilibrium_pgf(&poi, z).unwrap();
            assert!((got - want).abs() < 1e-9, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn prevalence_complement_closed_forms() {
        let p0 = prevalence_complement(&nb11_params()).unwrap();
        assert!((p0 - 2f64.powf(-5.0 / 3.0)).abs() < 1e-12);

        let p0 = prevalence_complement(&degenerate_params()).unwrap();
        assert!((p0 - (-2.5f64).exp()).abs() < 1e-12);

        // same formula as the PGF at 0
        let via_pgf = equilibrium_pgf(&nb11_params(), 0.0).unwrap();
        assert!((prevalence_complement(&nb11_params()).unwrap() - via_pgf).abs() < 1e-15);
    }

    #[test]
    fn vmr_closed_forms() {
        assert!((vmr(&degenerate_params()).unwrap() - 1.0).abs() < 1e-12);

        let nb2 = ModelParams::new(
            5.0,
            1.0,
            1.0,
            ClumpDistribution::negative_binomial(2.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!((vmr(&nb2).unwrap() - 3.0).abs() < 1e-12);

        // alpha = 0 branch: 1 + G''(1) / (2 G'(1)) for Poisson(4) clump
        let poi = ModelParams::new(5.0, 0.0, 1.0, ClumpDistribution::poisson(4.0).unwrap())
            .unwrap();
        assert!((vmr(&poi).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cv_closed_forms() {
        let nb2 = ModelParams::new(
            5.0,
            1.0,
            1.0,
            ClumpDistribution::negative_binomial(2.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!((cv(&nb2).unwrap().powi(2) - 1.2).abs() < 1e-12);

        let deg = degenerate_params();
        assert!((cv(&deg).unwrap() - 1.0 / 2.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cv_mean_vmr_identity() {
        // cv^2 * mean = vmr for a battery of parameter sets
        let cases = [
            degenerate_params(),
            nb11_params(),
            ModelParams::new(3.0, 0.5, 2.0, ClumpDistribution::poisson(4.0).unwrap()).unwrap(),
            ModelParams::new(2.0, 0.0, 1.5, ClumpDistribution::geometric(0.4).unwrap()).unwrap(),
            ModelParams::new(4.0, 2.0, 0.0, ClumpDistribution::poisson(2.0).unwrap()).unwrap(),
        ];
        for p in &cases {
            let (mean, _) = moments(p).unwrap();
            let lhs = cv(p).unwrap().powi(2) * mean;
            let rhs = vmr(p).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn moments_examples() {
        let (mean, var) = moments(&degenerate_params()).unwrap();
        assert!((mean - 2.5).abs() < 1e-12);
        assert!((var - 2.5).abs() < 1e-12);

        let (mean, var) = moments(&nb11_params()).unwrap();
        assert!((mean - 5.0 / 3.0).abs() < 1e-12);
        assert!((var - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mean_matches_numerical_differentiation() {
        // loose cross-check of the closed-form mean against a one-sided
        // second-order difference of the PGF at z = 1
        let cases = [nb11_params(), degenerate_params()];
        let h = 1e-4;
        for p in &cases {
            let (mean, _) = moments(p).unwrap();
            let g = |z: f64| equilibrium_pgf(p, z).unwrap();
            let numeric = (3.0 * g(1.0) - 4.0 * g(1.0 - h) + g(1.0 - 2.0 * h)) / (2.0 * h);
            assert!(
                (numeric - mean).abs() < 1e-4 * mean,
                "numeric {numeric} vs closed {mean}"
            );
        }
    }

    #[test]
    fn log_concave_clump_makes_cv_and_p0_nondecreasing_in_alpha() {
        let clump = ClumpDistribution::poisson(4.0).unwrap();
        for mu_m in [0.0, 1.0] {
            let mut prev_cv = 0.0;
            let mut prev_p0 = 0.0;
            for i in 1..=24 {
                let alpha = 0.125 * f64::from(i);
                let p = ModelParams::new(5.0, alpha, mu_m, clump.clone()).unwrap();
                let cv_now = cv(&p).unwrap();
                let p0_now = prevalence_complement(&p).unwrap();
                assert!(cv_now >= prev_cv - 1e-12, "cv dipped at alpha={alpha}");
                assert!(p0_now >= prev_p0 - 1e-12, "p0 dipped at alpha={alpha}");
                prev_cv = cv_now;
                prev_p0 = p0_now;
            }
        }
    }

    #[test]
    fn cv_scales_as_inverse_sqrt_phi() {
        let base = nb11_params();
        let doubled = base.with_phi(10.0).unwrap();
        let lhs = cv(&doubled).unwrap() * 2f64.sqrt();
        let rhs = cv(&base).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn transient_at_birth_is_one() {
        let params = nb11_params();
        for z in [0.0, 0.4, 0.9] {
            assert_eq!(transient_pgf(&params, 0.0, z).unwrap(), 1.0);
        }
    }

    #[test]
    fn transient_converges_to_equilibrium() {
        let params = ModelParams::new(
            3.0,
            0.05,
            0.5,
            ClumpDistribution::geometric(0.5).unwrap(),
        )
        .unwrap();
        for z in [0.0, 0.5, 0.8] {
            let eq = equilibrium_pgf(&params, z).unwrap();
            let tr = transient_pgf(&params, 80.0, z).unwrap();
            assert!((eq - tr).abs() < 1e-10, "z={z}: {tr} vs {eq}");
        }
    }

    #[test]
    fn transient_degenerate_matches_poisson_mean_curve() {
        // point-mass clump: load at age a is Poisson with mean
        // phi (1 - e^{-(alpha+mu) a}) / (alpha + mu)
        let params = degenerate_params();
        for a in [0.1, 0.5, 1.0, 3.0] {
            let m_a = 5.0 * (1.0 - (-2.0f64 * a).exp()) / 2.0;
            for z in [0.2, 0.7] {
                let got = transient_pgf(&params, a, z).unwrap();
                let want = (m_a * (z - 1.0)).exp();
                assert!(
                    (got - want).abs() < 1e-11,
                    "a={a} z={z}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn report_consistency() {
        let budget = InversionBudget::default();
        let rep = report(&nb11_params(), &budget).unwrap();
        assert!((rep.vmr - 2.0).abs() < 1e-10);
        assert!((rep.prevalence_complement - 2f64.powf(-5.0 / 3.0)).abs() < 1e-10);
        assert!((rep.pmf.mean() - rep.mean).abs() < 1e-6 * rep.mean);
        assert!(rep.gini > 0.0 && rep.gini < 1.0);
        assert!(rep.pietra <= rep.gini + 1e-12);
    }

    #[test]
    fn report_degenerate_matches_poisson_gini_oracle() {
        // Gini of the inverted pmf agrees with the double-sum oracle applied
        // to the closed-form Poisson pmf
        let budget = InversionBudget::default();
        let rep = report(&degenerate_params(), &budget).unwrap();
        assert!((rep.vmr - 1.0).abs() < 1e-12);

        let m = 2.5f64;
        let pmf: Vec<f64> = (0..60)
            .map(|k| {
                (-m + k as f64 * m.ln() - statrs::function::gamma::ln_gamma(k as f64 + 1.0)).exp()
            })
            .collect();
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let mut acc = 0.0;
        for i in 0..pmf.len() {
            for j in 0..i {
                acc += pmf[i] * pmf[j] * (i - j) as f64;
            }
        }
        let oracle = acc / mean;
        assert!(
            (rep.gini - oracle).abs() < 1e-8,
            "gini {} vs oracle {oracle}",
            rep.gini
        );
    }

    #[test]
    fn phi_mixture_inflates_cv() {
        let base = ModelParams::new(5.0, 0.0, 1.0, ClumpDistribution::degenerate(1).unwrap())
            .unwrap();
        let mixture = PhiMixture::new(vec![2.5, 7.5], vec![0.5, 0.5]).unwrap();
        let budget = InversionBudget::default();
        let fixed = report(&base, &budget).unwrap();
        let mixed = report_phi_mixture(&base, &mixture, &budget).unwrap();
        assert!(
            mixed.cv > fixed.cv + 0.1,
            "mixture cv {} should exceed fixed cv {}",
            mixed.cv,
            fixed.cv
        );
        // mixture of Poisson(2.5) and Poisson(7.5): mean 5, var 5 + 6.25
        assert!((mixed.mean - 5.0).abs() < 1e-6);
        assert!((mixed.variance - 11.25).abs() < 1e-5);
    }
}
