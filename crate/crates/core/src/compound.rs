//! Compound-Poisson decomposition of the equilibrium load.
//!
//! The equilibrium distribution is a compound Poisson whose summand law is
//! a mixture over components indexed by `j`: weight `omega_j(lambda)`
//! carries the component `F_j`, a unit-mean distribution determined by the
//! clump law alone. The mortality parameters enter only through `lambda`
//! (the weights) and the compound event rate.

use serde::Serialize;

use crate::clump::ClumpDistribution;
use crate::error::{Error, Result};
use crate::inversion::Pmf;
use crate::model::ModelParams;
use crate::numeric::KahanSum;

/// Hard cap on the truncation index of the weight sequence.
pub const COMPONENT_CAP: u64 = 1_000_000;

/// Truncated decomposition: weights `omega_0..omega_J`, the component
/// pmfs, and the compound-Poisson event rate.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentSystem {
    lambda: f64,
    weights: Vec<f64>,
    components: Vec<Pmf>,
    poisson_rate: f64,
}

impl ComponentSystem {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Pmf] {
        &self.components
    }

    pub fn poisson_rate(&self) -> f64 {
        self.poisson_rate
    }

    /// Weight mass lost to truncation: `1 - sum_j omega_j`.
    pub fn truncation_deficit(&self) -> f64 {
        (1.0 - crate::numeric::kahan_sum(self.weights.iter().copied())).max(0.0)
    }
}

/// Mixture weight `omega_j(lambda)`.
///
/// At `lambda = 0` all weight sits on `j = 0`; at `lambda = 1` the weights
/// are the normalized tail probabilities of the clump law.
pub fn weight(clump: &ClumpDistribution, lambda: f64, j: u64) -> Result<f64> {
    if !(lambda.is_finite() && (0.0..=1.0).contains(&lambda)) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} not in [0, 1]"
        )));
    }
    let beta = clump.tail_beta(j);
    if lambda == 1.0 {
        Ok(beta / clump.mean())
    } else {
        // lambda^0 = 1 also at lambda = 0
        let pow = lambda.powi(j.min(i32::MAX as u64) as i32);
        Ok(beta * (1.0 - lambda) * pow / (1.0 - clump.pgf(lambda)?))
    }
}

/// Component distribution `F_j`, from its power-series coefficients:
/// `pi_j(i+1) = pi_C(i+j+1) / (beta_j (i+1))` with the mass at zero set by
/// normalization. Requires `beta_j > 0`.
pub fn component_pmf(clump: &ClumpDistribution, j: u64, tol: f64) -> Result<Pmf> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    let beta = clump.tail_beta(j);
    if beta <= 0.0 {
        return Err(Error::NoComponent { j });
    }
    // keep terms until the clump tail contributes less than tol of beta_j
    let clump_bound = clump.truncate((tol * beta).max(1e-300))?;
    let terms = clump_bound.saturating_sub(j); // series indices i+1 = 1..=terms

    let mut mass = vec![0.0; (terms + 1).max(2) as usize];
    let mut acc = KahanSum::new();
    for i in 0..terms {
        let value = clump.pmf(i + j + 1) / (beta * (i + 1) as f64);
        mass[(i + 1) as usize] = value;
        acc.add(value);
    }
    let zero_mass = 1.0 - acc.value();
    if zero_mass < -1e-12 {
        return Err(Error::ConsistencyGate {
            what: format!("component {j} mass at zero"),
            got: zero_mass,
            want: 0.0,
            tol: 1e-12,
        });
    }
    mass[0] = zero_mass.max(0.0);
    let tail_bound = (clump.tail_beta(j + terms) / beta).max(0.0);
    Pmf::new(mass, tail_bound)
}

/// PGF of `F_j` at real `z`, summed from the series coefficients.
pub fn component_pgf(clump: &ClumpDistribution, j: u64, z: f64) -> Result<f64> {
    if !(z.is_finite() && (0.0..=1.0).contains(&z)) {
        return Err(Error::InvalidParameter(format!("z = {z} not in [0, 1]")));
    }
    let pmf = component_pmf(clump, j, 1e-14)?;
    Ok(pmf.pgf_at(num_complex::Complex64::new(z, 0.0)).re)
}

/// Build the truncated system for the given parameters: the truncation
/// index `J` is the first point where cumulative weight mass reaches
/// `1 - tol` (or the tail probabilities vanish, for finite clumps).
pub fn build_system(params: &ModelParams, tol: f64) -> Result<ComponentSystem> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    let clump = params.clump();
    let lambda = params.lambda();
    let poisson_rate = if params.alpha() > 0.0 {
        params.phi() * (1.0 - clump.pgf(lambda)?) / params.alpha()
    } else {
        params.phi() * clump.mean() / params.mu_m()
    };

    let component_tol = tol.min(1e-12);
    let mut weights = Vec::new();
    let mut components = Vec::new();
    let mut cum = KahanSum::new();
    let mut j = 0u64;
    loop {
        if clump.tail_beta(j) <= 0.0 {
            break;
        }
        let w = weight(clump, lambda, j)?;
        weights.push(w);
        components.push(component_pmf(clump, j, component_tol)?);
        cum.add(w);
        if 1.0 - cum.value() < tol {
            break;
        }
        j += 1;
        if j > COMPONENT_CAP {
            return Err(Error::TruncationOverflow { cap: COMPONENT_CAP });
        }
    }
    Ok(ComponentSystem {
        lambda,
        weights,
        components,
        poisson_rate,
    })
}

/// Reassemble the equilibrium PGF from the decomposition:
/// `exp(rate * sum_j omega_j (G_j(z) - 1))`.
pub fn reconstruct_pgf(system: &ComponentSystem, z: f64) -> Result<f64> {
    if !(z.is_finite() && (0.0..=1.0).contains(&z)) {
        return Err(Error::InvalidParameter(format!("z = {z} not in [0, 1]")));
    }
    let zc = num_complex::Complex64::new(z, 0.0);
    let mut acc = KahanSum::new();
    for (w, f) in system.weights.iter().zip(&system.components) {
        acc.add(w * (f.pgf_at(zc).re - 1.0));
    }
    Ok((system.poisson_rate * acc.value()).exp())
}
