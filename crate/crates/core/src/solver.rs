//! Method-of-lines integration of the symmetrized degenerate-viscosity system.
//!
//! With `W = (φ, v)`, `U = v + û` and `ϕ` the viscosity power, each cell evolves
//!
//! ```text
//! ϕ_t = −U·∇ϕ − ((δ−1)/2) ϕ div U
//! W_t = −Σ_j A_j(W) ∂_j W − εϕ²(0, Lv) + ε(0, ∇ϕ²·Q(U)) + G*(W, ϕ, û)
//! G*  = −B(∇û, W) − Σ_j û_j ∂_j W − ε(0, ϕ² Lû)
//! ```
//!
//! where `A_j(W)` has diagonal `v_j` and off-diagonal blocks `((γ−1)/2) φ e_j`,
//! `B = (((γ−1)/2) φ div û, (v·∇)û)`, `L` is the Lamé operator and
//! `Q = δ/(δ−1) S` the scaled stress. All first derivatives are second-order
//! centred differences; time stepping is classical RK4. With `ε = 0` every
//! viscous term is skipped, which is the inviscid (Euler) system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::{BackgroundFlow, Mat3, Vec3};
use crate::constants::ModelParameters;
use crate::energy::{self, EnergyReport, EnergySample};
use crate::grid::{self, BoundaryMode, Grid};
use crate::{Error, Result};

/// Grid fields of the reformulated system.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    /// `φ = √(4Aγ/(γ−1)²) ρ^{(γ−1)/2}`.
    pub sound: Vec<f64>,
    /// `ϕ = ρ^{(δ−1)/2}`.
    pub visc: Vec<f64>,
    /// `v = u − û`, one field per active axis.
    pub vel: Vec<Vec<f64>>,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.len();
        Self { t: 0.0, sound: vec![0.0; n], visc: vec![0.0; n], vel: vec![vec![0.0; n]; grid.dim] }
    }

    pub fn len(&self) -> usize {
        self.sound.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sound.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.fields().all(|f| f.iter().all(|v| v.is_finite()))
    }

    pub fn fields(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.sound).chain(std::iter::once(&self.visc)).chain(self.vel.iter())
    }

    pub fn fields_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        std::iter::once(&mut self.sound).chain(std::iter::once(&mut self.visc)).chain(self.vel.iter_mut())
    }

    /// `self + a · d` (time advanced by `a`).
    fn axpy(&self, a: f64, d: &State) -> State {
        let mut out = self.clone();
        for (o, df) in out.fields_mut().zip(d.fields()) {
            for (x, y) in o.iter_mut().zip(df) {
                *x += a * y;
            }
        }
        out.t = self.t + a;
        out
    }

    /// Largest pointwise difference over all fields.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.fields()
            .zip(other.fields())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Bitwise equality of all field values.
    pub fn bitwise_eq(&self, other: &State) -> bool {
        self.fields().zip(other.fields()).all(|(a, b)| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        })
    }
}

/// Time derivative of a [`State`]; `t` carries no meaning.
pub type Derivative = State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StressVariant {
    /// `S(u) = α(∇u + ∇uᵀ) + β div u I`.
    #[default]
    Full,
    /// `T = ερ^δ(2α∇u + β div u I)`.
    Gradient,
    /// Viscous term `εαρ^δ Δu`.
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Viscous,
    /// Inviscid limit: all viscous terms removed regardless of `ε`.
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub mode: Mode,
    pub variant: StressVariant,
    /// Coefficient of the fourth-order dissipation `−c h⁻¹ Σ_j δ_j⁴ W`. Zero by default.
    pub hyperdiffusion: f64,
    /// CFL safety factor.
    pub safety: f64,
    /// Cells next to each face where `φ`, `ϕ` are held at zero.
    pub collar: usize,
    /// Minimum distance in cells between the density support and the box.
    pub margin: usize,
    /// Relative density level (of `max ρ`) above which a cell counts as supported.
    pub support_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Viscous,
            variant: StressVariant::Full,
            hyperdiffusion: 0.0,
            safety: 0.4,
            collar: 2,
            margin: 4,
            support_tolerance: 1e-12,
        }
    }
}

/// Background flow sampled on the grid at one time.
#[derive(Debug, Clone)]
pub struct BackgroundField {
    pub u: Vec<Vec3>,
    pub grad: Vec<Mat3>,
    /// `L û` for the active stress variant.
    pub lame: Vec<Vec3>,
}

impl BackgroundField {
    pub fn zero(n: usize) -> Self {
        Self { u: vec![Vec3::zeros(); n], grad: vec![Mat3::zeros(); n], lame: vec![Vec3::zeros(); n] }
    }
}

/// Flux matrix `A_j(W)` of size `d+1` acting on `W = (φ, v)`.
pub fn flux_matrix(params: &ModelParameters, sound: f64, vel: &[f64], j: usize) -> nalgebra::DMatrix<f64> {
    let d = vel.len();
    let mut a = nalgebra::DMatrix::from_diagonal_element(d + 1, d + 1, vel[j]);
    let off = 0.5 * (params.gamma - 1.0) * sound;
    a[(0, j + 1)] = off;
    a[(j + 1, 0)] = off;
    a
}

/// Coefficients of `L u = −a Δu − b ∇div u` for each stress variant.
pub fn lame_coefficients(params: &ModelParameters, variant: StressVariant) -> (f64, f64) {
    match variant {
        StressVariant::Full => (params.alpha, params.alpha + params.beta),
        StressVariant::Gradient => (2.0 * params.alpha, params.beta),
        StressVariant::Laplacian => (params.alpha, 0.0),
    }
}

/// Scaled stress `Q(G) = δ/(δ−1) T(G)` for a velocity gradient `G_ij = ∂_j u_i`.
/// Zero for the Laplacian variant, whose viscous term has no `∇ρ^δ` part.
pub fn stress_q(params: &ModelParameters, variant: StressVariant, g: &Mat3, dim: usize) -> Mat3 {
    let scale = params.delta / (params.delta - 1.0);
    let tr = g.trace();
    let mut id = Mat3::zeros();
    for i in 0..dim {
        id[(i, i)] = 1.0;
    }
    let t = match variant {
        StressVariant::Full => params.alpha * (g + g.transpose()) + params.beta * tr * id,
        StressVariant::Gradient => 2.0 * params.alpha * g + params.beta * tr * id,
        StressVariant::Laplacian => Mat3::zeros(),
    };
    scale * t
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub clip_events: usize,
    /// `(t, dt)` of every step taken.
    pub cfl_history: Vec<(f64, f64)>,
    pub mass_initial: f64,
    pub mass_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DtPolicy {
    /// `dt` recomputed from the CFL limit at every step.
    Adaptive,
    /// Fixed step; rejected if above the unscaled stability limit.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub t_end: f64,
    /// Times at which full states are stored.
    pub sample_times: Vec<f64>,
    /// Times at which energy samples are recorded (always includes `t = 0`).
    pub energy_times: Vec<f64>,
    pub dt: DtPolicy,
    /// Accumulate the weighted dissipation integral at every step.
    pub track_dissipation: bool,
}

impl RunSettings {
    pub fn new(t_end: f64) -> Self {
        Self { t_end, sample_times: vec![t_end], energy_times: vec![], dt: DtPolicy::Adaptive, track_dissipation: false }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: Vec<State>,
    pub energy: EnergyReport,
    pub stats: RunStats,
    pub final_state: State,
}

/// Grid, parameters, background flow and discretization options.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Grid,
    pub params: ModelParameters,
    pub flow: Option<BackgroundFlow>,
    pub options: SolverOptions,
}

impl Model {
    pub fn new(grid: Grid, params: ModelParameters, flow: Option<BackgroundFlow>, options: SolverOptions) -> Result<Self> {
        params.validate()?;
        if let Some(f) = &flow {
            if f.dim() != grid.dim {
                return Err(Error::Grid(format!("flow dimension {} != grid dimension {}", f.dim(), grid.dim)));
            }
        }
        if !(options.safety > 0.0) || options.hyperdiffusion < 0.0 {
            return Err(Error::InvalidParameter("safety must be positive, hyperdiffusion nonnegative".into()));
        }
        Ok(Self { grid, params, flow, options })
    }

    /// `ε` actually used by the right-hand side.
    pub fn effective_epsilon(&self) -> f64 {
        match self.options.mode {
            Mode::Euler => 0.0,
            Mode::Viscous => self.params.epsilon,
        }
    }

    /// Same model with a different `ε`.
    pub fn with_epsilon(&self, eps: f64) -> Self {
        let mut m = self.clone();
        m.params.epsilon = eps;
        m
    }

    pub fn euler(&self) -> Self {
        let mut m = self.clone();
        m.options.mode = Mode::Euler;
        m
    }

    pub fn background(&self, t: f64) -> Result<BackgroundField> {
        let n = self.grid.len();
        let Some(flow) = &self.flow else {
            return Ok(BackgroundField::zero(n));
        };
        let (a, b) = lame_coefficients(&self.params, self.options.variant);
        let jets: Vec<_> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = self.grid.position(i);
                flow.jet(t, &Vec3::new(x[0], x[1], x[2]))
            })
            .collect::<Result<_>>()?;
        let mut field = BackgroundField::zero(n);
        for (i, (u, g, hess)) in jets.into_iter().enumerate() {
            let mut l = Vec3::zeros();
            for c in 0..3 {
                let lap: f64 = (0..3).map(|k| hess[c][(k, k)]).sum();
                let grad_div: f64 = (0..3).map(|k| hess[k][(c, k)]).sum();
                l[c] = -a * lap - b * grad_div;
            }
            field.u[i] = u;
            field.grad[i] = g;
            field.lame[i] = l;
        }
        Ok(field)
    }

    pub fn rhs(&self, state: &State) -> Result<Derivative> {
        let bg = self.background(state.t)?;
        Ok(self.rhs_with(state, &bg))
    }

    /// Right-hand side with a precomputed background field.
    pub fn rhs_with(&self, state: &State, bg: &BackgroundField) -> Derivative {
        let g = &self.grid;
        let d = g.dim;
        let p = &self.params;
        let eps = self.effective_epsilon();
        let half_g = 0.5 * (p.gamma - 1.0);
        let half_d = 0.5 * (p.delta - 1.0);
        let (la, lb) = lame_coefficients(p, self.options.variant);
        let hyper = self.options.hyperdiffusion / g.spacing;
        let visc_sq: Vec<f64> = if eps != 0.0 { state.visc.iter().map(|x| x * x).collect() } else { Vec::new() };
        let truncated = g.boundary == BoundaryMode::TruncatedSupport;
        let collar = self.options.collar;

        let cells: Vec<(f64, f64, [f64; 3])> = (0..g.len())
            .into_par_iter()
            .map(|c| {
                let mut dv = [0.0f64; 3];
                let mut grad_v = Mat3::zeros();
                for i in 0..d {
                    for j in 0..d {
                        grad_v[(i, j)] = grid::diff_at(g, &state.vel[i], c, j);
                    }
                }
                let div_v = grad_v.trace();
                let uh = bg.u[c];
                let div_uh = bg.grad[c].trace();
                let phi = state.sound[c];
                let vphi = state.visc[c];

                let mut adv_sound = 0.0;
                let mut adv_visc = 0.0;
                for j in 0..d {
                    let total = state.vel[j][c] + uh[j];
                    adv_sound += total * grid::diff_at(g, &state.sound, c, j);
                    adv_visc += total * grid::diff_at(g, &state.visc, c, j);
                }
                let mut ds = -adv_sound - half_g * phi * div_v - half_g * phi * div_uh;
                let mut dphi = -adv_visc - half_d * vphi * (div_v + div_uh);

                for i in 0..d {
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += (state.vel[j][c] + uh[j]) * grad_v[(i, j)];
                        acc += bg.grad[c][(i, j)] * state.vel[j][c];
                    }
                    acc += half_g * phi * grid::diff_at(g, &state.sound, c, i);
                    dv[i] = -acc;
                }

                if eps != 0.0 {
                    let vsq = visc_sq[c];
                    let total_grad = grad_v + bg.grad[c];
                    let q = stress_q(p, self.options.variant, &total_grad, d);
                    for i in 0..d {
                        let mut lap = 0.0;
                        let mut grad_div = 0.0;
                        for k in 0..d {
                            lap += grid::second_at(g, &state.vel[i], c, k, k);
                            grad_div += grid::second_at(g, &state.vel[k], c, i, k);
                        }
                        let lv = -la * lap - lb * grad_div;
                        let mut force = 0.0;
                        for j in 0..d {
                            force += grid::diff_at(g, &visc_sq, c, j) * q[(i, j)];
                        }
                        dv[i] += eps * (-vsq * lv + force - vsq * bg.lame[c][i]);
                    }
                }

                if hyper != 0.0 {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += grid::fourth_undivided_at(g, &state.sound, c, j);
                    }
                    ds -= hyper * s;
                    for (i, dvi) in dv.iter_mut().enumerate().take(d) {
                        let mut s = 0.0;
                        for j in 0..d {
                            s += grid::fourth_undivided_at(g, &state.vel[i], c, j);
                        }
                        *dvi -= hyper * s;
                    }
                }

                if truncated && g.boundary_distance(c) < collar {
                    ds = 0.0;
                    dphi = 0.0;
                }
                (ds, dphi, dv)
            })
            .collect();

        let mut out = State::zeros(g);
        out.t = state.t;
        for (c, (ds, dphi, dv)) in cells.into_iter().enumerate() {
            out.sound[c] = ds;
            out.visc[c] = dphi;
            for i in 0..d {
                out.vel[i][c] = dv[i];
            }
        }
        out
    }

    /// Stable step size `safety · min{h / max(|u| + ((γ−1)/2)φ√d), h² / (ε max ϕ² c_L 2d)}`.
    pub fn cfl_dt(&self, state: &State, bg: &BackgroundField) -> f64 {
        self.stability_limit(state, bg) * self.options.safety
    }

    fn stability_limit(&self, state: &State, bg: &BackgroundField) -> f64 {
        let g = &self.grid;
        let d = g.dim;
        let half_g = 0.5 * (self.params.gamma - 1.0);
        let sqrt_d = (d as f64).sqrt();
        let mut speed: f64 = 0.0;
        let mut visc_max: f64 = 0.0;
        for c in 0..g.len() {
            let mut u2 = 0.0;
            for i in 0..d {
                let u = state.vel[i][c] + bg.u[c][i];
                u2 += u * u;
            }
            speed = speed.max(u2.sqrt() + half_g * state.sound[c] * sqrt_d);
            visc_max = visc_max.max(state.visc[c] * state.visc[c]);
        }
        let h = g.spacing;
        let hyper_dt = h / speed.max(1e-300);
        let eps = self.effective_epsilon();
        let (la, lb) = lame_coefficients(&self.params, self.options.variant);
        let diff_coef = eps * visc_max * (la + lb.max(0.0)) * 2.0 * d as f64;
        let diff_dt = if diff_coef > 0.0 { h * h / diff_coef } else { f64::INFINITY };
        hyper_dt.min(diff_dt)
    }

    fn clip(&self, s: &mut State) -> usize {
        let mut n = 0;
        for f in [&mut s.sound, &mut s.visc] {
            for x in f.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                    n += 1;
                }
            }
        }
        if self.grid.boundary == BoundaryMode::TruncatedSupport {
            for c in 0..self.grid.len() {
                if self.grid.boundary_distance(c) < self.options.collar {
                    s.sound[c] = 0.0;
                    s.visc[c] = 0.0;
                }
            }
        }
        n
    }

    /// One classical RK4 step with nonnegativity clipping after every stage.
    /// Returns the new state and the number of clipped values.
    pub fn step(&self, state: &State, dt: f64) -> Result<(State, usize)> {
        let bg0 = self.background(state.t)?;
        let limit = self.stability_limit(state, &bg0);
        if dt > limit {
            return Err(Error::CflViolation { dt, limit });
        }
        self.step_with(state, dt, &bg0)
    }

    fn step_with(&self, state: &State, dt: f64, bg0: &BackgroundField) -> Result<(State, usize)> {
        let mut clips = 0;
        let k1 = self.rhs_with(state, bg0);
        let bg_half = self.background(state.t + 0.5 * dt)?;
        let mut s2 = state.axpy(0.5 * dt, &k1);
        clips += self.clip(&mut s2);
        let k2 = self.rhs_with(&s2, &bg_half);
        let mut s3 = state.axpy(0.5 * dt, &k2);
        clips += self.clip(&mut s3);
        let k3 = self.rhs_with(&s3, &bg_half);
        let bg1 = self.background(state.t + dt)?;
        let mut s4 = state.axpy(dt, &k3);
        clips += self.clip(&mut s4);
        let k4 = self.rhs_with(&s4, &bg1);

        let mut next = state.clone();
        let w = dt / 6.0;
        for (((((o, a), b), c), e), _) in next
            .fields_mut()
            .zip(k1.fields())
            .zip(k2.fields())
            .zip(k3.fields())
            .zip(k4.fields())
            .zip(0..)
        {
            for i in 0..o.len() {
                o[i] += w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + e[i]);
            }
        }
        next.t = state.t + dt;
        clips += self.clip(&mut next);
        if !next.is_finite() {
            return Err(Error::BlowUp { t: next.t });
        }
        Ok((next, clips))
    }

    /// Fails if a supported cell lies within `margin` cells of the box.
    /// A cell is supported when its density exceeds `support_tolerance · max ρ`.
    pub fn check_margin(&self, state: &State) -> Result<()> {
        if self.grid.boundary != BoundaryMode::TruncatedSupport {
            return Ok(());
        }
        let max = state.sound.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return Ok(());
        }
        let level = support_level(&self.params, self.options.support_tolerance) * max;
        for c in 0..self.grid.len() {
            if state.sound[c] > level && self.grid.boundary_distance(c) < self.options.margin {
                return Err(Error::MarginViolation { t: state.t });
            }
        }
        Ok(())
    }

    /// Discrete mass `∫ρ`.
    pub fn mass(&self, state: &State) -> f64 {
        let rho: Vec<f64> = state.sound.iter().map(|&s| density_from_sound(&self.params, s)).collect();
        grid::integrate(&self.grid, &rho)
    }

    /// Integrates to `settings.t_end`, landing exactly on every sample and
    /// energy time.
    pub fn run(&self, initial: &State, settings: &RunSettings) -> Result<RunOutput> {
        let mut stops: Vec<f64> = settings
            .sample_times
            .iter()
            .chain(settings.energy_times.iter())
            .copied()
            .filter(|&t| t > initial.t && t <= settings.t_end)
            .chain(std::iter::once(settings.t_end))
            .collect();
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        let is_sample = |t: f64| settings.sample_times.iter().any(|&s| s == t);
        let is_energy = |t: f64| settings.energy_times.iter().any(|&s| s == t);

        let eps = self.effective_epsilon();
        let mut stats = RunStats { mass_initial: self.mass(initial), ..Default::default() };
        let mut state = initial.clone();
        let mut samples = Vec::new();
        if is_sample(state.t) {
            samples.push(state.clone());
        }
        let mut report = EnergyReport::default();
        report.push(energy::compute(&self.grid, &state, eps), 0.0);
        let mut dissipation = 0.0;
        let mut last_rate = if settings.track_dissipation {
            energy::dissipation_rate(&self.grid, &state, eps)
        } else {
            0.0
        };

        self.check_margin(&state)?;
        for &stop in &stops {
            while state.t < stop {
                let bg = self.background(state.t)?;
                let remaining = stop - state.t;
                let dt = match settings.dt {
                    DtPolicy::Adaptive => self.cfl_dt(&state, &bg),
                    DtPolicy::Fixed(dt) => {
                        let limit = self.stability_limit(&state, &bg);
                        if dt > limit {
                            return Err(Error::CflViolation { dt, limit });
                        }
                        dt
                    }
                };
                // Land exactly on the stop without producing a sliver step.
                let dt = if dt >= remaining * (1.0 - 1e-12) { remaining } else { dt.min(remaining) };
                let (mut next, clips) = self.step_with(&state, dt, &bg)?;
                if (next.t - stop).abs() <= 1e-12 * stop.abs().max(1.0) {
                    next.t = stop;
                }
                stats.steps += 1;
                stats.clip_events += clips;
                stats.cfl_history.push((state.t, dt));
                if settings.track_dissipation {
                    let rate = energy::dissipation_rate(&self.grid, &next, eps);
                    dissipation += 0.5 * dt * (rate + last_rate);
                    last_rate = rate;
                }
                state = next;
                self.check_margin(&state)?;
            }
            if is_sample(stop) {
                samples.push(state.clone());
            }
            if is_energy(stop) || stop == settings.t_end {
                if report.samples.last().map(|s: &EnergySample| s.t) != Some(state.t) {
                    report.push(energy::compute(&self.grid, &state, eps), dissipation);
                }
            }
        }
        stats.mass_final = self.mass(&state);
        Ok(RunOutput { samples, energy: report, stats, final_state: state })
    }
}

/// Relative `φ` level equivalent to the relative density level `tol`.
pub fn support_level(params: &ModelParameters, tol: f64) -> f64 {
    tol.powf(0.5 * (params.gamma - 1.0))
}

/// `ρ = ((γ−1)² φ² / (4Aγ))^{1/(γ−1)}`, zero in vacuum.
pub fn density_from_sound(params: &ModelParameters, sound: f64) -> f64 {
    if sound <= 0.0 {
        return 0.0;
    }
    (sound / params.sound_scale()).powf(2.0 / (params.gamma - 1.0))
}

/// Physical fields recovered from a state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalFields {
    pub density: Vec<f64>,
    pub velocity: Vec<Vec<f64>>,
    pub pressure: Vec<f64>,
}

pub fn reconstruct_physical(model: &Model, state: &State) -> Result<PhysicalFields> {
    let p = &model.params;
    let bg = model.background(state.t)?;
    let density: Vec<f64> = state.sound.iter().map(|&s| density_from_sound(p, s)).collect();
    let pressure = density.iter().map(|&r| p.pressure * r.powf(p.gamma)).collect();
    let velocity = (0..model.grid.dim)
        .map(|i| state.vel[i].iter().zip(&bg.u).map(|(v, u)| v + u[i]).collect())
        .collect();
    Ok(PhysicalFields { density, velocity, pressure })
}
