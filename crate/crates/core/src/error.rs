use thiserror::Error;

/// Errors produced by the analytic, inversion, order, and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid clump distribution: {0}")]
    InvalidClump(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, target {target:.3e}")]
    QuadratureFailure { achieved: f64, target: f64 },

    #[error("truncation index search exceeded cap of {cap}")]
    TruncationOverflow { cap: u64 },

    #[error("no component distribution for index {j}: tail probability is zero")]
    NoComponent { j: u64 },

    #[error("distribution has zero mean; index undefined")]
    ZeroMean,

    #[error("means differ beyond tolerance: left {left}, right {right}")]
    UnequalMeans { left: f64, right: f64 },

    #[error("unsupported derivative order {0} (only 1 and 2)")]
    UnsupportedOrder(u32),

    #[error("negative mass from inversion exceeds budget: clamped {clamped:.3e}")]
    NegativeMass { clamped: f64 },

    #[error("consistency gate failed for {what}: got {got}, want {want} (tol {tol:.1e})")]
    ConsistencyGate {
        what: String,
        got: f64,
        want: f64,
        tol: f64,
    },

    #[error("no surviving hosts in ensemble; indices undefined")]
    NoSurvivors,
}

pub type Result<T> = std::result::Result<T, Error>;
