//! Admissible initial densities, the compact-support truncation and the
//! `ε`-indexed family of initial data.

use serde::{Deserialize, Serialize};

use crate::constants::ModelParameters;
use crate::grid::{self, BoundaryMode, Grid};
use crate::solver::{support_level, SolverOptions, State};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    /// `ν₁ / (1+|x|)^{2σ}`.
    InversePower,
    /// `ν₁ g^{2σ}` with `g = (1 − |x|²/R²)₊⁴`.
    Bump,
    /// `ν₁ e^{−|x|²}`.
    Gaussian,
    /// `ν₁ |x| / (1+|x|)^{2σ}`.
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub kind: DensityKind,
    /// Amplitude `ν₁`.
    pub amplitude: f64,
    pub sigma: f64,
    /// Radius `R` of the bump.
    pub radius: f64,
    /// Truncation radius `N`; the sound power is multiplied by `F(|x|/N)`.
    pub truncation: Option<f64>,
}

impl DensityProfile {
    pub fn bump(amplitude: f64, sigma: f64, radius: f64) -> Self {
        Self { kind: DensityKind::Bump, amplitude, sigma, radius, truncation: None }
    }

    /// Lower bound on `σ` for this kind, `None` if unconstrained.
    pub fn sigma_bound(kind: DensityKind, params: &ModelParameters) -> Option<f64> {
        let m = (1.0 / (params.delta - 1.0)).max(1.0 / (params.gamma - 1.0));
        match kind {
            DensityKind::InversePower => Some(1.5 * m),
            DensityKind::Bump => Some(3.0 * m),
            DensityKind::Cusp => Some(1.5 * m + 0.5),
            DensityKind::Gaussian => None,
        }
    }

    pub fn validate(&self, params: &ModelParameters) -> Result<()> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative density amplitude {}", self.amplitude)));
        }
        if let Some(b) = Self::sigma_bound(self.kind, params) {
            if !(self.sigma > b) {
                return Err(Error::InvalidParameter(format!(
                    "sigma = {} must exceed {b} for {:?} profile",
                    self.sigma, self.kind
                )));
            }
        }
        if self.kind == DensityKind::Bump && !(self.radius > 0.0) {
            return Err(Error::InvalidParameter("bump radius must be positive".into()));
        }
        if let Some(n) = self.truncation {
            if !(n > 0.0) {
                return Err(Error::InvalidParameter("truncation radius must be positive".into()));
            }
        }
        Ok(())
    }

    /// Untruncated `ρ₀` at distance `r` from the origin.
    pub fn raw_density(&self, r: f64) -> f64 {
        let nu = self.amplitude;
        match self.kind {
            DensityKind::InversePower => nu * (1.0 + r).powf(-2.0 * self.sigma),
            DensityKind::Bump => {
                let g = (1.0 - r * r / (self.radius * self.radius)).max(0.0).powi(4);
                nu * g.powf(2.0 * self.sigma)
            }
            DensityKind::Gaussian => nu * (-r * r).exp(),
            DensityKind::Cusp => nu * r * (1.0 + r).powf(-2.0 * self.sigma),
        }
    }

    /// `ρ₀^{(γ−1)/2}` including the truncation factor.
    pub fn power(&self, params: &ModelParameters, r: f64) -> f64 {
        let p = self.raw_density(r).powf(0.5 * (params.gamma - 1.0));
        match self.truncation {
            Some(n) => p * cutoff(r / n),
            None => p,
        }
    }

    pub fn density(&self, params: &ModelParameters, r: f64) -> f64 {
        density_from_power(params, self.power(params, r))
    }
}

fn density_from_power(params: &ModelParameters, p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p.powf(2.0 / (params.gamma - 1.0))
    }
}

/// `S(s) = 35s⁴ − 84s⁵ + 70s⁶ − 20s⁷`, the `C³` smoothstep on `[0, 1]`.
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s.powi(4) * (35.0 + s * (-84.0 + s * (70.0 - 20.0 * s)))
}

/// Cutoff `F(r)`: 1 on `r ≤ 1`, 0 on `r ≥ 2`, `C³` in between.
pub fn cutoff(r: f64) -> f64 {
    1.0 - smoothstep(r - 1.0)
}

fn radius(x: [f64; 3], dim: usize) -> f64 {
    x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Norms of the initial powers entering the smallness assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialNorms {
    /// `|∇^k φ₀|₂`, `k = 0..3`.
    pub sound: [f64; 4],
    /// `|∇^k ϕ₀|₂`, `k = 0..2`.
    pub visc: [f64; 3],
    /// Largest `|x|` with `φ₀ > 0`.
    pub support_radius: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub state: State,
    pub density: Vec<f64>,
    pub norms: InitialNorms,
}

/// Discrete `(φ₀, ϕ₀, v₀ = 0)` from a density profile.
pub fn make_initial_data(grid: &Grid, profile: &DensityProfile, params: &ModelParameters) -> Result<InitialData> {
    profile.validate(params)?;
    let pos = grid.positions();
    let power: Vec<f64> = pos.iter().map(|&x| profile.power(params, radius(x, grid.dim))).collect();
    let density: Vec<f64> = power.iter().map(|&p| density_from_power(params, p)).collect();
    state_from_density(grid, &density, params)
}

/// Initial state from sampled densities.
pub fn state_from_density(grid: &Grid, density: &[f64], params: &ModelParameters) -> Result<InitialData> {
    if density.len() != grid.len() {
        return Err(Error::Grid("density length does not match the grid".into()));
    }
    if let Some(r) = density.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative or undefined density {r}")));
    }
    let scale = params.sound_scale();
    let mut state = State::zeros(grid);
    for (i, &r) in density.iter().enumerate() {
        state.sound[i] = scale * r.powf(0.5 * (params.gamma - 1.0));
        state.visc[i] = r.powf(0.5 * (params.delta - 1.0));
    }
    let defaults = SolverOptions::default();
    let level = support_level(params, defaults.support_tolerance) * state.sound.iter().cloned().fold(0.0, f64::max);
    let mut support_radius: f64 = 0.0;
    for i in 0..grid.len() {
        if state.sound[i] > 0.0 {
            support_radius = support_radius.max(radius(grid.position(i), grid.dim));
            if grid.boundary == BoundaryMode::TruncatedSupport
                && state.sound[i] > level
                && grid.boundary_distance(i) < defaults.margin
            {
                return Err(Error::Grid("initial density support reaches the grid boundary".into()));
            }
        }
    }
    let mut sound = [0.0; 4];
    for (k, s) in sound.iter_mut().enumerate() {
        *s = grid::seminorm_sq(grid, &state.sound, k, None).sqrt();
    }
    let mut visc = [0.0; 3];
    for (k, s) in visc.iter_mut().enumerate() {
        *s = grid::seminorm_sq(grid, &state.visc, k, None).sqrt();
    }
    let mass = grid::integrate(grid, density);
    Ok(InitialData { state, density: density.to_vec(), norms: InitialNorms { sound, visc, support_radius, mass } })
}

/// Parameters `(p, q, η, a)` of the `ε`-indexed initial family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsFamily {
    pub p: f64,
    pub q: f64,
    pub eta: f64,
    pub a: f64,
}

impl EpsFamily {
    pub fn validate(&self, params: &ModelParameters) -> Result<()> {
        let bound = (1.5 / (params.gamma - 1.0)).max(1.5 / (params.delta - 1.0));
        if !(self.a > bound) {
            return Err(Error::InvalidParameter(format!("family exponent a = {} must exceed {bound}", self.a)));
        }
        if !(self.p > 0.0 && self.q > 0.0 && self.eta >= 0.0) {
            return Err(Error::InvalidParameter("family needs p, q > 0 and eta >= 0".into()));
        }
        let e = params.power_ratio();
        if e > 2.0 && e < 3.0 {
            let slack = 0.5 - (3.0 - e) * (self.p + self.a * self.q * (params.gamma - 1.0));
            if slack < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "for e = {e} the family needs 1/2 - (3-e)(p + a q (gamma-1)) >= 0, got {slack}"
                )));
            }
        }
        Ok(())
    }
}

/// Density whose `(γ−1)/2` power is `ρ₀^{(γ−1)/2} F(ε^q|x|) + η ε^p f^{(γ−1)/2}`,
/// `f = 1/(1+|x|^{2a})`.
pub fn eps_family(grid: &Grid, base: &[f64], params: &ModelParameters, eps: f64, family: &EpsFamily) -> Result<Vec<f64>> {
    family.validate(params)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("family needs eps in (0, 1], got {eps}")));
    }
    if base.len() != grid.len() {
        return Err(Error::Grid("base density length does not match the grid".into()));
    }
    let half = 0.5 * (params.gamma - 1.0);
    let lift = family.eta * eps.powf(family.p);
    Ok(base
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let r = radius(grid.position(i), grid.dim);
            let f = 1.0 / (1.0 + r.powf(2.0 * family.a));
            let p = rho.max(0.0).powf(half) * cutoff(eps.powf(family.q) * r) + lift * f.powf(half);
            density_from_power(params, p)
        })
        .collect())
}

/// Discrete `L²` distance between the `(γ−1)/2` powers of two densities.
pub fn power_distance(grid: &Grid, a: &[f64], b: &[f64], params: &ModelParameters) -> f64 {
    let half = 0.5 * (params.gamma - 1.0);
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x.powf(half) - y.powf(half)).powi(2)).collect();
    grid::integrate(grid, &d).sqrt()
}
