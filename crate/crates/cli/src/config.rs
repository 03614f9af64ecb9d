//! Experiment configuration, read from a single JSON document.

use std::path::Path;

use grushin_core::fields::CATALOG;
use grushin_core::frequency::{log_grid, InverseQuartic, Potential, ZeroPotential};
use grushin_core::hardy::InequalityId;
use grushin_core::{Error, GridSpec, Method, QuadSettings, Quadrature, Result, SpaceParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub radii: RadiusGrid,
    pub quadrature: QuadratureConfig,
    /// Catalog fields used by `hardy` and `quad-selftest`.
    pub fields: Vec<String>,
    /// Support radius of the `bump` field.
    pub bump_radius: f64,
    pub identities: IdentitiesConfig,
    pub hardy: HardyConfig,
    pub frequency: FrequencyConfig,
    pub solver: SolverConfig,
    /// Output directory; `--out` takes precedence.
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            space: SpaceConfig::default(),
            radii: RadiusGrid::default(),
            quadrature: QuadratureConfig::default(),
            fields: CATALOG.iter().map(|s| s.to_string()).collect(),
            bump_radius: 2.0,
            identities: IdentitiesConfig::default(),
            hardy: HardyConfig::default(),
            frequency: FrequencyConfig::default(),
            solver: SolverConfig::default(),
            output_dir: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig { m: 5, n: 1, alpha: 1.0 }
    }
}

/// Log-uniform radii from `r_min` to `r_max`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiusGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
}

impl Default for RadiusGrid {
    fn default() -> Self {
        RadiusGrid { r_min: 0.5, r_max: 2.0, per_decade: 64 }
    }
}

impl RadiusGrid {
    pub fn build(&self) -> Result<Vec<f64>> {
        log_grid(self.r_min, self.r_max, self.per_decade)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub method: Method,
    pub settings: QuadSettings,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { method: Method::Reduced2d, settings: QuadSettings::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub points: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub fields: Vec<String>,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig { points: 1000, seed: 7, tolerance: 1e-6, fields: vec!["gauss".into(), "x1".into(), "poly_mix".into()] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardyConfig {
    pub radii: Vec<f64>,
    /// Inequality tags; empty selects all six.
    pub inequalities: Vec<String>,
}

impl Default for HardyConfig {
    fn default() -> Self {
        HardyConfig { radii: vec![0.25, 0.5, 1.0, 1.5, 2.0], inequalities: Vec::new() }
    }
}

impl HardyConfig {
    pub fn ids(&self) -> Result<Vec<InequalityId>> {
        if self.inequalities.is_empty() {
            return Ok(InequalityId::ALL.to_vec());
        }
        self.inequalities
            .iter()
            .map(|t| InequalityId::from_tag(t).ok_or_else(|| Error::Input(format!("unknown inequality `{t}`"))))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    /// `c0 / rho_eps^4`
    InverseQuartic,
    /// `Delta_X^2 u / u` for the profiled field.
    Consistent,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub c0: f64,
    /// Regularization radius; `None` on the solver picks two grid cells.
    pub eps: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { kind: PotentialKind::Zero, c0: 0.0, eps: None }
    }
}

impl PotentialConfig {
    pub fn inverse_quartic(&self, default_eps: f64) -> InverseQuartic {
        InverseQuartic { c0: self.c0, eps: self.eps.unwrap_or(default_eps) }
    }

    /// Potentials that do not depend on a field.
    pub fn fixed(&self, default_eps: f64) -> Option<Box<dyn Potential>> {
        match self.kind {
            PotentialKind::Zero => Some(Box::new(ZeroPotential)),
            PotentialKind::InverseQuartic => Some(Box::new(self.inverse_quartic(default_eps))),
            PotentialKind::Consistent => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySource {
    /// A catalog field, with `w = Delta_X u`.
    Field,
    /// The solution of the configured boundary value problem.
    Solver,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyConfig {
    pub source: FrequencySource,
    pub field: String,
    pub potential: PotentialConfig,
    /// Left end of `Omega`; defaults to the smallest radius.
    pub r0: Option<f64>,
    pub doubling: bool,
    /// Largest admissible relative residual of the `H'` identity.
    pub h_tolerance: f64,
    /// Radius for the Caccioppoli check; skipped when absent.
    pub caccioppoli_r: Option<f64>,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        FrequencyConfig {
            source: FrequencySource::Field,
            field: "rho2".into(),
            potential: PotentialConfig { kind: PotentialKind::Consistent, c0: 0.0, eps: None },
            r0: None,
            doubling: true,
            h_tolerance: 2e-2,
            caccioppoli_r: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverProblem {
    /// Convergence study against a manufactured solution.
    Manufactured,
    /// Dirichlet data from a catalog field and its Laplacian.
    Data,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub problem: SolverProblem,
    pub s_max: f64,
    pub t_max: f64,
    /// Nodes per direction; the manufactured study runs every entry.
    pub nodes: Vec<usize>,
    pub potential: PotentialConfig,
    /// Fix nodes with `rho` below this radius to the data.
    pub excision: Option<f64>,
    /// Catalog field providing the Dirichlet data.
    pub data_field: String,
    pub residual_target: f64,
    /// Smallest accepted observed order in the discrete L^2 norm.
    pub min_order: f64,
    /// Smallest accepted observed order in the max norm.
    pub min_order_max: f64,
    /// Run the frequency checks on the solution.
    pub chain_frequency: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            problem: SolverProblem::Manufactured,
            s_max: 1.0,
            t_max: 1.0,
            nodes: vec![65, 129, 257],
            potential: PotentialConfig { kind: PotentialKind::InverseQuartic, c0: 1.0, eps: Some(0.1) },
            excision: None,
            data_field: "rho4".into(),
            residual_target: grushin_core::solver::RESIDUAL_TARGET,
            min_order: 1.9,
            min_order_max: 1.7,
            chain_frequency: false,
        }
    }
}

impl SolverConfig {
    pub fn grid(&self, nodes: usize) -> Result<GridSpec> {
        GridSpec::new(self.s_max, self.t_max, nodes, nodes)
    }
}

/// A parsed configuration together with its source text.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub raw: String,
    pub config: ExperimentConfig,
}

impl LoadedConfig {
    pub fn parse(raw: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(raw).map_err(|e| Error::Input(format!("config: {e}")))?;
        config.space()?;
        config.quadrature.settings.validate()?;
        Ok(LoadedConfig { raw: raw.to_string(), config })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&raw)
    }
}

impl ExperimentConfig {
    pub fn space(&self) -> Result<SpaceParams> {
        SpaceParams::new(self.space.m, self.space.n, self.space.alpha)
    }

    pub fn quadrature(&self) -> Result<Quadrature> {
        Quadrature::new(self.space()?, self.quadrature.method, self.quadrature.settings.clone())
    }
}
