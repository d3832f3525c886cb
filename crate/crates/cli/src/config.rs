//! Run configuration: a sectioned TOML file.
//!
//! Every section and key is optional; missing values take the defaults below.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use vvlab::background::{InitialVelocity, PerturbationKind};
use vvlab::constants::{ConstantsVariant, ModelParameters};
use vvlab::grid::{BoundaryMode, Grid};
use vvlab::ode::OdeParams;
use vvlab::scenarios::{DensityKind, DensityProfile};
use vvlab::solver::{SolverOptions, StressVariant};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub velocity: VelocitySection,
    pub density: DensitySection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub ode: OdeSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { name: "run".into(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub pressure: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub constants: ConstantsVariant,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParameters::default();
        Self {
            gamma: p.gamma,
            delta: p.delta,
            alpha: p.alpha,
            beta: p.beta,
            pressure: p.pressure,
            epsilon: p.epsilon,
            kappa: 0.5,
            constants: ConstantsVariant::Standard,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParameters {
        ModelParameters {
            gamma: self.gamma,
            delta: self.delta,
            alpha: self.alpha,
            beta: self.beta,
            pressure: self.pressure,
            epsilon: self.epsilon,
            kappa: self.kappa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityKind {
    #[default]
    Expanding,
    Affine,
}

/// Initial velocity and the sampling used by `background`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocitySection {
    pub kind: VelocityKind,
    /// Rate `s` of `u₀ = s·x`.
    pub rate: f64,
    /// Row-major matrix for affine data.
    pub matrix: Vec<f64>,
    pub shift: Vec<f64>,
    pub perturbation: PerturbationKind,
    pub amplitude: f64,
    /// Largest time sampled by `background`.
    pub t_max: f64,
    pub time_samples: usize,
    /// Random points drawn for the `background` CSV.
    pub points: usize,
    pub half_width: f64,
}

impl Default for VelocitySection {
    fn default() -> Self {
        Self {
            kind: VelocityKind::Expanding,
            rate: 0.5,
            matrix: vec![],
            shift: vec![],
            perturbation: PerturbationKind::None,
            amplitude: 0.0,
            t_max: 10.0,
            time_samples: 11,
            points: 100,
            half_width: 3.0,
        }
    }
}

impl VelocitySection {
    pub fn initial(&self, dim: usize) -> Result<InitialVelocity, CliError> {
        let u0 = match self.kind {
            VelocityKind::Expanding => InitialVelocity::expanding(dim, self.rate),
            VelocityKind::Affine => InitialVelocity::affine(dim, &self.matrix, &self.shift)?,
        };
        Ok(u0.with_perturbation(self.perturbation, self.amplitude))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub kind: DensityKind,
    pub amplitude: f64,
    pub sigma: f64,
    pub radius: f64,
    pub truncation: Option<f64>,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self { kind: DensityKind::Bump, amplitude: 1e-4, sigma: 3.2, radius: 2.0, truncation: None }
    }
}

impl DensitySection {
    pub fn profile(&self) -> DensityProfile {
        DensityProfile {
            kind: self.kind,
            amplitude: self.amplitude,
            sigma: self.sigma,
            radius: self.radius,
            truncation: self.truncation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub cells: usize,
    pub half_width: f64,
    pub boundary: BoundaryMode,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 1, cells: 256, half_width: 8.0, boundary: BoundaryMode::TruncatedSupport }
    }
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::centered(self.dim, self.cells, self.half_width, self.boundary)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub variant: StressVariant,
    pub t_end: f64,
    /// Number of equally spaced energy samples on `[0, t_end]`, endpoints included.
    pub energy_samples: usize,
    pub safety: f64,
    pub hyperdiffusion: f64,
    /// Fixed step; adaptive when absent.
    pub dt: Option<f64>,
    /// Envelope exponent; fitted when absent.
    pub iota: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            variant: o.variant,
            t_end: 1.0,
            energy_samples: 11,
            safety: o.safety,
            hyperdiffusion: o.hyperdiffusion,
            dt: None,
            iota: None,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { variant: self.variant, safety: self.safety, hyperdiffusion: self.hyperdiffusion, ..Default::default() }
    }

    pub fn energy_times(&self) -> Vec<f64> {
        let n = self.energy_samples.max(2);
        (0..n).map(|i| self.t_end * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub ladder: Vec<f64>,
    pub t_end: f64,
    /// Defaults to `{0.25, 0.5, 1}·t_end`.
    pub sample_times: Option<Vec<f64>>,
    pub dt: Option<f64>,
    /// Exponent of the Gronwall envelopes.
    pub iota: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { ladder: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3], t_end: 1.0, sample_times: None, dt: None, iota: 1.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeSection {
    pub b: f64,
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
    pub z0: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for OdeSection {
    fn default() -> Self {
        Self { b: 1.8, a: 3.0, c1: 1.0, c2: 0.0, d1: 1.5, d2: -2.0, z0: 0.5, t_end: 10.0, dt: 1e-2 }
    }
}

impl OdeSection {
    pub fn params(&self) -> OdeParams {
        OdeParams { b: self.b, a: self.a, c1: self.c1, c2: self.c2, d1: self.d1, d2: self.d2, z0: self.z0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Manifests to merge; every `*_manifest.json` in the output directory when empty.
    pub inputs: Vec<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String, CliError> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
