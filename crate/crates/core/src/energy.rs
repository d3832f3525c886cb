//! Time-weighted energy of a state and decay fits.
//!
//! `Y_k = |∇^k W|₂` for `W = (φ, v)` and `U_k = Θ(k)|∇^k ϕ|₂`, `k = 0..3`, with
//! `Θ(k) = 1` for `k ≤ 2` and `Θ(3) = ε^{1/2}`. The energy is
//!
//! ```text
//! Z² = Σ_k (1+t)^{2(k−2.5)} Y_k² + Σ_k (1+t)^{2(k−3)} U_k².
//! ```

use serde::{Deserialize, Serialize};

use crate::fit;
use crate::grid::{self, Grid};
use crate::solver::State;
use crate::{Error, Result};

/// Offset of the `W` weights.
pub const N_OFFSET: f64 = 2.5;
/// Offset of the `ϕ` weights (`n + 1/2`).
pub const M_OFFSET: f64 = 3.0;
pub const MAX_ORDER: usize = 3;

/// `Θ(k)`.
pub fn theta(k: usize, eps: f64) -> f64 {
    if k < MAX_ORDER {
        1.0
    } else {
        eps.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub y: [f64; 4],
    pub u: [f64; 4],
    pub z: f64,
}

impl EnergySample {
    /// `(1+t)^{2(k−2.5)} Y_k²`.
    pub fn weighted_y_sq(&self, k: usize) -> f64 {
        (1.0 + self.t).powf(2.0 * (k as f64 - N_OFFSET)) * self.y[k] * self.y[k]
    }

    pub fn weighted_u_sq(&self, k: usize) -> f64 {
        (1.0 + self.t).powf(2.0 * (k as f64 - M_OFFSET)) * self.u[k] * self.u[k]
    }
}

/// Instantaneous energy of `state` at its own time.
pub fn compute(grid: &Grid, state: &State, eps: f64) -> EnergySample {
    let mut y = [0.0; 4];
    let mut u = [0.0; 4];
    for k in 0..=MAX_ORDER {
        let mut w = grid::seminorm_sq(grid, &state.sound, k, None);
        for f in &state.vel {
            w += grid::seminorm_sq(grid, f, k, None);
        }
        y[k] = w.sqrt();
        u[k] = theta(k, eps) * grid::seminorm_sq(grid, &state.visc, k, None).sqrt();
    }
    let mut s = EnergySample { t: state.t, y, u, z: 0.0 };
    let z_sq: f64 = (0..=MAX_ORDER).map(|k| s.weighted_y_sq(k) + s.weighted_u_sq(k)).sum();
    s.z = z_sq.sqrt();
    s
}

/// Integrand of the dissipation accumulator,
/// `ε Σ_{k=0}^{3} (1+t)^{2(k−2.5)} |ϕ ∇^{k+1} v|₂²`.
pub fn dissipation_rate(grid: &Grid, state: &State, eps: f64) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 0..=MAX_ORDER {
        let weight = (1.0 + state.t).powf(2.0 * (k as f64 - N_OFFSET));
        let mut s = 0.0;
        for f in &state.vel {
            s += grid::seminorm_sq(grid, f, k + 1, Some(&state.visc));
        }
        total += weight * s;
    }
    eps * total
}

/// Energy time series with the accumulated dissipation at each sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub samples: Vec<EnergySample>,
    pub dissipation: Vec<f64>,
    /// Envelope `C₀(1+t)^{−ι}`, once fitted.
    pub envelope: Option<(f64, f64)>,
}

impl EnergyReport {
    pub fn push(&mut self, sample: EnergySample, dissipation: f64) {
        self.samples.push(sample);
        self.dissipation.push(dissipation);
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn z(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.z).collect()
    }

    /// Fits the decay and stores the envelope `(C₀, ι)` with `C₀ = sup (1+t)^ι Z`.
    pub fn fit_envelope(&mut self, iota: Option<f64>) -> Result<DecayFit> {
        let f = fit_decay(&self.times(), &self.z(), iota)?;
        self.envelope = Some((f.sup_weighted, f.iota));
        Ok(f)
    }

    /// CSV with columns `t, Y0..Y3, U0..U3, Z, dissipation, envelope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,Y0,Y1,Y2,Y3,U0,U1,U2,U3,Z,dissipation,envelope\n");
        for (s, d) in self.samples.iter().zip(&self.dissipation) {
            let env = match self.envelope {
                Some((c, iota)) => c * (1.0 + s.t).powf(-iota),
                None => f64::NAN,
            };
            let row: Vec<String> = std::iter::once(s.t)
                .chain(s.y)
                .chain(s.u)
                .chain([s.z, *d, env])
                .map(|v| format!("{v:.16e}"))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted exponent of `Z ≈ C (1+t)^{slope}`.
    pub slope: f64,
    pub constant: f64,
    /// Exponent used for the envelope (the given `ι`, or `−slope`).
    pub iota: f64,
    /// `sup_t (1+t)^ι Z(t)` over the usable samples.
    pub sup_weighted: f64,
    pub used: usize,
}

/// Least squares of `ln Z` against `ln(1+t)`. Nonpositive samples are skipped
/// with a warning; at least five usable samples are required.
pub fn fit_decay(t: &[f64], z: &[f64], iota: Option<f64>) -> Result<DecayFit> {
    if t.len() != z.len() {
        return Err(Error::Fit("time and energy series differ in length".into()));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut kept = Vec::new();
    for (&ti, &zi) in t.iter().zip(z) {
        if zi > 0.0 && zi.is_finite() {
            lx.push((1.0 + ti).ln());
            ly.push(zi.ln());
            kept.push((ti, zi));
        } else {
            log::warn!("skipping nonpositive energy sample Z({ti}) = {zi}");
        }
    }
    if kept.len() < 5 {
        return Err(Error::Fit(format!("decay fit needs 5 positive samples, got {}", kept.len())));
    }
    let line = fit::linear_fit(&lx, &ly)?;
    let iota = iota.unwrap_or(-line.slope);
    let sup_weighted = kept.iter().map(|&(ti, zi)| (1.0 + ti).powf(iota) * zi).fold(0.0, f64::max);
    Ok(DecayFit { slope: line.slope, constant: line.intercept.exp(), iota, sup_weighted, used: kept.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryMode;
    use std::f64::consts::PI;

    #[test]
    fn zero_state_zero_energy() {
        let g = Grid::new(1, 32, 0.0, 1.0, BoundaryMode::PeriodicTest).unwrap();
        let e = compute(&g, &State::zeros(&g), 0.1);
        assert_eq!(e.z, 0.0);
        assert!(e.y.iter().chain(&e.u).all(|&v| v == 0.0));
    }

    #[test]
    fn sine_norms() {
        let g = Grid::new(1, 256, 0.0, 1.0, BoundaryMode::PeriodicTest).unwrap();
        let mut s = State::zeros(&g);
        s.sound = g.sample(|x| (2.0 * PI * x[0]).sin());
        let e = compute(&g, &s, 1.0);
        assert!((e.y[0] - 0.5f64.sqrt()).abs() < 1e-3);
        assert!((e.y[1] - 2.0 * PI / 2f64.sqrt()).abs() < 1e-3 * 4.44288);
    }

    #[test]
    fn theta_on_top_order() {
        let g = Grid::new(1, 64, 0.0, 1.0, BoundaryMode::PeriodicTest).unwrap();
        let mut s = State::zeros(&g);
        s.visc = g.sample(|x| (2.0 * PI * x[0]).cos());
        let a = compute(&g, &s, 0.01);
        let b = compute(&g, &s, 1.0);
        assert!((a.u[3] - 0.1 * b.u[3]).abs() < 1e-12 * b.u[3]);
    }

    #[test]
    fn exact_power_law() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let z: Vec<f64> = t.iter().map(|t| 5.0 * (1.0 + t).powf(-1.8)).collect();
        let f = fit_decay(&t, &z, None).unwrap();
        assert!((f.slope + 1.8).abs() < 1e-6);
        assert!((f.constant - 5.0).abs() < 1e-6);
        assert!((f.sup_weighted - 5.0).abs() < 1e-6);
        let f = fit_decay(&t, &vec![1.0; 20], None).unwrap();
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_decay(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 0.5, 0.0, 0.2, 0.1], None).is_err());
    }
}
