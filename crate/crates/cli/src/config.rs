//! Declarative experiment configs, accepted as TOML or JSON (by file
//! extension). Unknown fields are rejected so schema mistakes surface as
//! config errors, not silently ignored knobs.

use std::fs;
use std::path::Path;

use macroparasite::{ClumpDistribution, InversionBudget, ModelParams, PhiMixture};
use serde::Deserialize;

use crate::CliError;

/// Clump description, e.g. `{"type": "negbin", "mean": 1.0, "k": 0.4}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClumpSpec {
    Degenerate { c: u32 },
    Geometric { p: f64 },
    Negbin { mean: f64, k: f64 },
    Poisson { mean: f64 },
    Finite { weights: Vec<f64> },
    Geommix { weights: Vec<f64>, ps: Vec<f64> },
}

impl ClumpSpec {
    pub fn build(&self) -> Result<ClumpDistribution, CliError> {
        let built = match self {
            ClumpSpec::Degenerate { c } => ClumpDistribution::degenerate(*c),
            ClumpSpec::Geometric { p } => ClumpDistribution::geometric(*p),
            ClumpSpec::Negbin { mean, k } => ClumpDistribution::negative_binomial(*mean, *k),
            ClumpSpec::Poisson { mean } => ClumpDistribution::poisson(*mean),
            ClumpSpec::Finite { weights } => ClumpDistribution::finite_support(weights.clone()),
            ClumpSpec::Geommix { weights, ps } => {
                ClumpDistribution::geometric_mixture(weights.clone(), ps.clone())
            }
        };
        built.map_err(|e| CliError::Config(format!("clump spec rejected: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub phi: f64,
    pub alpha: f64,
    pub mu_m: f64,
}

impl ParamsSpec {
    pub fn build(&self, clump: &ClumpSpec) -> Result<ModelParams, CliError> {
        ModelParams::new(self.phi, self.alpha, self.mu_m, clump.build()?)
            .map_err(|e| CliError::Config(format!("params rejected: {e}")))
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSpec {
    pub mass_tol: Option<f64>,
    pub target_error: Option<f64>,
}

impl InversionSpec {
    pub fn budget(&self) -> InversionBudget {
        let default = InversionBudget::default();
        InversionBudget {
            mass_tol: self.mass_tol.unwrap_or(default.mass_tol),
            target_error: self.target_error.unwrap_or(default.target_error),
        }
    }
}

#[derive(Debug, Clone, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhiMixtureSpec {
    pub phis: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PhiMixtureSpec {
    pub fn build(&self) -> Result<PhiMixture, CliError> {
        PhiMixture::new(self.phis.clone(), self.weights.clone())
            .map_err(|e| CliError::Config(format!("phi mixture rejected: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub params: ParamsSpec,
    pub clump: ClumpSpec,
    #[serde(default)]
    pub inversion: InversionSpec,
    #[serde(default)]
    pub phi_mixture: Option<PhiMixtureSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub params: ParamsSpec,
    pub clump: ClumpSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub left: SystemSpec,
    pub right: SystemSpec,
    #[serde(default)]
    pub inversion: InversionSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub params: ParamsSpec,
    pub clump: ClumpSpec,
    pub age: f64,
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub phi_mixture: Option<PhiMixtureSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub params: ParamsSpec,
    pub clump: ClumpSpec,
    /// Weight-mass truncation tolerance for the decomposition.
    #[serde(default = "default_decompose_tol")]
    pub tol: f64,
    /// Maximum number of rows to dump.
    #[serde(default = "default_max_rows")]
    pub max_rows: u64,
    /// Leading component-pmf entries per row.
    #[serde(default = "default_component_len")]
    pub component_len: usize,
}

fn default_decompose_tol() -> f64 {
    1e-10
}
fn default_max_rows() -> u64 {
    64
}
fn default_component_len() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    pub params: ParamsSpec,
    pub clump: ClumpSpec,
    #[serde(default)]
    pub inversion: InversionSpec,
    /// Fixed truncation point; searched automatically when absent.
    #[serde(default)]
    pub k_max: Option<u64>,
}

/// Grid `min, min+step, ..., <= max` (with a half-step tolerance at the end).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0 && self.max >= self.min) {
            return Err(CliError::Config(format!(
                "bad grid: min {} max {} step {}",
                self.min, self.max, self.step
            )));
        }
        let n = ((self.max - self.min) / self.step + 0.5).floor() as usize;
        Ok((0..=n).map(|i| self.min + i as f64 * self.step).collect())
    }
}

/// Overrides for the figure grids; defaults reproduce the built-in
/// parameter sweeps.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    pub phi: Option<f64>,
    pub alpha: Option<f64>,
    pub mu_m: Option<f64>,
    /// x-axis grid: alpha (figure 1), mu_m (figure 2), clump mean (figure 3).
    pub x: Option<GridSpec>,
    /// Per-line parameter: dispersion k (figure 1), clump mean (figure 2).
    pub series: Option<Vec<f64>>,
    #[serde(default)]
    pub inversion: InversionSpec,
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
