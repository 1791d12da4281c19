//! Independent Monte Carlo oracle: exact-event simulation of the host
//! CTMC, conditioning on host survival by rejection.
//!
//! Each replicate runs competing exponential clocks — infectious contact
//! at rate `phi` (adding a clump draw to the load), single parasite death
//! at rate `mu_m * m`, host death at rate `alpha * m` — until the
//! observation age. Baseline host mortality is load-independent, cancels
//! from the conditional law, and is not simulated.
//!
//! Replicates use counter-based RNG streams derived from
//! `(seed, replicate index)`, so parallel and serial runs produce
//! bit-identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::Pmf;
use crate::model::{ModelParams, PhiMixture};
use crate::par::map_indexed;

/// One simulated host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HostOutcome {
    Died,
    Survived(u64),
}

/// Ensemble configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub params: ModelParams,
    /// Observation age.
    pub age: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Optional per-host random contact rate.
    pub phi_mixture: Option<PhiMixture>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.age.is_finite() && self.age >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "age = {} must be >= 0",
                self.age
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        Ok(())
    }
}

/// Point estimate with a 95% normal-approximation half width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

/// Ensemble summary over the surviving hosts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub replicates: u64,
    pub survivors: u64,
    pub survival_fraction: f64,
    pub empirical_pmf: Pmf,
    pub mean_ci: Estimate,
    pub cv_ci: Estimate,
    pub prevalence_ci: Estimate,
}

/// The RNG stream for one replicate: same seed, per-replicate counter.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Simulate one host to `age` with exact competing exponential clocks.
pub fn simulate_host<R: Rng + ?Sized>(
    params: &ModelParams,
    age: f64,
    rng: &mut R,
) -> HostOutcome {
    let phi = params.phi();
    let alpha = params.alpha();
    let mu = params.mu_m();
    let clump = params.clump();

    let mut load: u64 = 0;
    let mut t = 0.0;
    loop {
        let m = load as f64;
        let total = phi + (mu + alpha) * m;
        let dt = rand_distr::Exp::new(total)
            .expect("positive total rate")
            .sample(rng);
        if t + dt > age {
            return HostOutcome::Survived(load);
        }
        t += dt;
        let u: f64 = rng.random::<f64>() * total;
        if u < phi {
            load += clump.sample(rng);
        } else if u < phi + mu * m {
            load -= 1;
        } else {
            return HostOutcome::Died;
        }
    }
}

/// Run independent replicates and summarize the survivors.
///
/// With a `phi_mixture` each host draws its own contact rate first, from
/// its own stream. Returns an error when no host survives.
pub fn run_ensemble(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let outcomes: Vec<HostOutcome> = map_indexed(cfg.replicates as usize, |r| {
        let mut rng = replicate_rng(cfg.seed, r as u64);
        match &cfg.phi_mixture {
            Some(mixture) => {
                let phi = mixture.sample(&mut rng);
                let params = cfg
                    .params
                    .with_phi(phi)
                    .expect("mixture phis validated at construction");
                simulate_host(&params, cfg.age, &mut rng)
            }
            None => simulate_host(&cfg.params, cfg.age, &mut rng),
        }
    });

    let loads: Vec<u64> = outcomes
        .iter()
        .filter_map(|o| match o {
            HostOutcome::Survived(m) => Some(*m),
            HostOutcome::Died => None,
        })
        .collect();
    let survivors = loads.len() as u64;
    if survivors == 0 {
        return Err(Error::NoSurvivors);
    }

    let n = survivors as f64;
    let max_load = *loads.iter().max().expect("nonempty") as usize;
    let mut counts = vec![0u64; max_load + 1];
    for m in &loads {
        counts[*m as usize] += 1;
    }
    let mass: Vec<f64> = counts.iter().map(|c| *c as f64 / n).collect();
    let empirical_pmf = Pmf::new(mass, 0.0)?;

    // central moments up to order 4 for the delta-method CV interval
    let mean = loads.iter().map(|m| *m as f64).sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for m in &loads {
        let d = *m as f64 - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let z95 = 1.959963984540054;
    let mean_ci = Estimate {
        value: mean,
        half_width: z95 * (m2 / n).sqrt(),
    };

    let cv_ci = if mean > 0.0 && m2 > 0.0 {
        let sd = m2.sqrt();
        let cv = sd / mean;
        // gradient of (mean, variance) -> sqrt(v)/m
        let da = -sd / (mean * mean);
        let db = 1.0 / (2.0 * sd * mean);
        let var_cv = (da * da * m2 + db * db * (m4 - m2 * m2) + 2.0 * da * db * m3) / n;
        Estimate {
            value: cv,
            half_width: z95 * var_cv.max(0.0).sqrt(),
        }
    } else {
        Estimate {
            value: f64::NAN,
            half_width: f64::INFINITY,
        }
    };

    let p0 = counts[0] as f64 / n;
    let prevalence_ci = Estimate {
        value: p0,
        half_width: z95 * (p0 * (1.0 - p0) / n).sqrt(),
    };

    Ok(SimResult {
        replicates: cfg.replicates,
        survivors,
        survival_fraction: n / cfg.replicates as f64,
        empirical_pmf,
        mean_ci,
        cv_ci,
        prevalence_ci,
    })
}
