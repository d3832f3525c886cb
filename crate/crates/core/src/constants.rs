//! Model parameters, derived exponents and admissibility conditions.
//!
//! Everything here is a closed-form rational function of `(γ, δ, α, β)`.
//! Comparisons that classify parameters are strict and carry no tolerance.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Raw physical constants of the degenerate-viscosity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    /// Adiabatic exponent, `> 1`.
    pub gamma: f64,
    /// Viscosity power, `> 1`.
    pub delta: f64,
    /// Shear viscosity factor, `> 0`.
    pub alpha: f64,
    /// Bulk viscosity factor, `2α + 3β ≥ 0`.
    pub beta: f64,
    /// Pressure constant `A` in `P = Aρ^γ`.
    pub pressure: f64,
    /// Viscosity scale `ε ∈ (0, 1]`; zero is accepted for inviscid runs.
    pub epsilon: f64,
    /// Spectral lower bound of the initial velocity gradient.
    pub kappa: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self { gamma: 2.0, delta: 3.0, alpha: 1.0, beta: -0.6, pressure: 1.0, epsilon: 1.0, kappa: 1.0 }
    }
}

impl ModelParameters {
    pub fn new(gamma: f64, delta: f64, alpha: f64, beta: f64) -> Self {
        Self { gamma, delta, alpha, beta, ..Self::default() }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Checks the parameter invariants. `ε = 0` is allowed (Euler limit).
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        let all = [self.gamma, self.delta, self.alpha, self.beta, self.pressure, self.epsilon, self.kappa];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.gamma <= 1.0 {
            return bad("gamma must exceed 1");
        }
        if self.delta <= 1.0 {
            return bad("delta must exceed 1");
        }
        if self.alpha <= 0.0 {
            return bad("alpha must be positive");
        }
        if 2.0 * self.alpha + 3.0 * self.beta < 0.0 {
            return bad("2 alpha + 3 beta must be nonnegative");
        }
        if self.pressure <= 0.0 {
            return bad("pressure constant must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.kappa <= 0.0 {
            return bad("kappa must be positive");
        }
        Ok(())
    }

    /// `√(4Aγ/(γ−1)²)`, the factor between `ρ^{(γ−1)/2}` and `φ`.
    pub fn sound_scale(&self) -> f64 {
        (4.0 * self.pressure * self.gamma / ((self.gamma - 1.0) * (self.gamma - 1.0))).sqrt()
    }

    /// `e = (δ−1)/(γ−1)`, the exponent with `ϕ = c φ^e`.
    pub fn power_ratio(&self) -> f64 {
        (self.delta - 1.0) / (self.gamma - 1.0)
    }

    /// The constant `c = ((γ−1)/(2√(Aγ)))^e` in `ϕ = c φ^e`.
    pub fn consistency_constant(&self) -> f64 {
        ((self.gamma - 1.0) / (2.0 * (self.pressure * self.gamma).sqrt())).powf(self.power_ratio())
    }
}

/// Which third argument the `ε*` and `η*` minima use.
///
/// `Standard`: `ε*` with 1, `η*` with 1/10.
/// `Tight`: the smaller values used by the energy inequality, `ε*` with 1/10
/// and `η*` with 1/20.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantsVariant {
    #[default]
    Standard,
    Tight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub eps_star: f64,
    pub eta_star: f64,
    pub b_star: f64,
    /// Decay exponent `ι = (1 − η*) b*`.
    pub iota: f64,
    /// Exponent `r` used for the low-order sound-speed weight.
    pub r: f64,
    /// `d* = (3/2)δ − M3/4`.
    pub d_star: f64,
    /// Energy weight offset for `W` (`γ_k = k − n`).
    pub n: f64,
    /// Energy weight offset for `ϕ` (`δ_k = k − m`).
    pub m: f64,
}

pub const WEIGHT_N: f64 = 2.5;
pub const WEIGHT_M: f64 = 3.0;

pub fn derive_constants(params: &ModelParameters) -> Result<DerivedConstants> {
    derive_constants_with(params, ConstantsVariant::Standard)
}

pub fn derive_constants_with(params: &ModelParameters, variant: ConstantsVariant) -> Result<DerivedConstants> {
    params.validate()?;
    let ModelParameters { gamma, delta, alpha, beta, .. } = *params;
    let lame = 2.0 * alpha + beta;
    if lame == 0.0 {
        return Err(Error::DivisionByZero("2 alpha + beta"));
    }
    if delta == 1.0 {
        return Err(Error::DivisionByZero("delta - 1"));
    }
    let dm1 = (delta - 1.0) * (delta - 1.0);

    let m1 = (2.0 * alpha + 3.0 * beta) / lame;
    let m3 = dm1 / (4.0 * lame) + 4.0 * delta * delta * lame * m1 * m1 / dm1 + 2.0 * m1 * delta;
    let m2 = -3.0 * delta + 1.0 + 0.5 * m3;

    let (eps_cap, eta_cap) = match variant {
        ConstantsVariant::Standard => (1.0, 0.1),
        ConstantsVariant::Tight => (0.1, 0.05),
    };
    let eps_star = 0.5 * (1.5 * (gamma - 1.0)).min(0.5 * (-m2 - 1.0)).min(eps_cap);
    let m4 = eps_star + m2;
    let eta_star = (3.0 * gamma - 3.0) / (4.0 * (3.0 * gamma - 1.0));
    let eta_star = eta_star.min((-m4 - 1.0) / (6.0 * delta - m3)).min(eta_cap);

    let d_star = 1.5 * delta - 0.25 * m3;
    let five_thirds = 5.0 / 3.0;
    let b_star = if gamma >= five_thirds { d_star.min(2.0) } else { d_star.min(1.5 * gamma - 0.5) };
    let iota = (1.0 - eta_star) * b_star;
    let r = if gamma >= five_thirds { -0.5 } else { 1.5 * gamma - 3.0 };

    Ok(DerivedConstants { m1, m2, m3, m4, eps_star, eta_star, b_star, iota, r, d_star, n: WEIGHT_N, m: WEIGHT_M })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    P1,
    P2,
    P3,
    P4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub satisfied: Vec<Condition>,
    pub admissible: bool,
    /// Necessary condition `M1 < 3/2 − 1/δ` for the P1 parameter set to be nonempty.
    pub p1_feasible: bool,
}

impl ConditionReport {
    pub fn holds(&self, c: Condition) -> bool {
        self.satisfied.contains(&c)
    }
}

pub fn check_conditions(params: &ModelParameters) -> Result<ConditionReport> {
    let k = derive_constants(params)?;
    let ModelParameters { gamma, delta, alpha, beta, .. } = *params;
    let m1_cap = 1.5 - 1.0 / delta;
    let mut satisfied = Vec::new();
    if k.m1 > 0.0 && k.m1 < m1_cap && k.m2 < -1.0 {
        satisfied.push(Condition::P1);
    }
    if 2.0 * alpha + 3.0 * beta == 0.0 {
        satisfied.push(Condition::P2);
    }
    if delta >= 2.0 * gamma - 1.0 {
        satisfied.push(Condition::P3);
    }
    if delta == gamma {
        satisfied.push(Condition::P4);
    }
    Ok(ConditionReport { admissible: !satisfied.is_empty(), satisfied, p1_feasible: k.m1 < m1_cap })
}
