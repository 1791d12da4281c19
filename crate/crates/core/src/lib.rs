//! Equilibrium parasite-load analysis for a continuous-time
//! host-macroparasite model with parasite-induced host mortality.
//!
//! Hosts acquire parasite clumps at Poisson contact times, parasites die
//! individually, and each parasite adds a constant increment to the host
//! death rate. The crate computes the load distribution of a surviving
//! host: exact generating functions, a compound-Poisson decomposition
//! into unit-mean components, numerical PGF inversion to a pmf,
//! aggregation indices (VMR, CV, prevalence, Gini, Pietra, Lorenz
//! curves), certified convex- and Lorenz-order comparisons, and an
//! independent Gillespie-style Monte Carlo oracle.
//!
//! The `parallel` feature (on by default) runs ensembles, inversions and
//! parameter grids on rayon; results are identical with it disabled.

pub mod clump;
pub mod compound;
pub mod error;
pub mod inversion;
pub mod model;
pub mod orders;
pub mod simulate;

mod numeric;
mod par;
mod quad;

pub use clump::{ClumpDistribution, LogShape, LogShapeClass};
pub use compound::{build_system, component_pgf, component_pmf, reconstruct_pgf, weight, ComponentSystem};
pub use error::{Error, Result};
pub use inversion::{choose_k_max, invert, PgfEvaluator, Pmf};
pub use model::{
    cv, equilibrium_pgf, equilibrium_pgf_complex, moments, prevalence_complement, report,
    report_phi_mixture, transient_pgf, vmr, AggregationReport, InversionBudget, ModelParams,
    PhiMixture,
};
pub use orders::{
    convex_order_check, gini, lorenz_curve, lorenz_order_check, pietra, survival_crossing_check,
    Certificate, LorenzCurve, OrderVerdict, Relation,
};
pub use simulate::{
    replicate_rng, run_ensemble, simulate_host, Estimate, HostOutcome, SimConfig, SimResult,
};
