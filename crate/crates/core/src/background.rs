//! Pressureless background flow `û_t + û·∇û = 0` solved by characteristics.
//!
//! Along `X(t; x₀) = x₀ + t u₀(x₀)` the velocity is constant, so
//! `û(t, x) = u₀(x₀)` with `x₀` the foot of the characteristic through `x`.
//! The gradient is `∇û = (I + t∇u₀(x₀))^{-1} ∇u₀(x₀)`. Affine data invert in
//! closed form; perturbed data use damped Newton iteration.
//!
//! Lower dimensions are embedded in 3D with the unused components zero.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Second derivatives: `hess[i][(j, k)] = ∂_j ∂_k û_i`.
pub type Hessian = [Mat3; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    #[default]
    None,
    /// `f_i(x) = sin(x_i) · exp(−|x|²/2)`.
    SinBump,
    /// `f_i(x) = sin(x_i)`.
    Sine,
}

/// `u₀(x) = 𝒜x + b + ν₂ f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialVelocity {
    pub dim: usize,
    pub matrix: Mat3,
    pub shift: Vec3,
    pub perturbation: PerturbationKind,
    pub amplitude: f64,
}

impl InitialVelocity {
    /// Affine data from a row-major `d×d` matrix and a length-`d` shift.
    pub fn affine(dim: usize, matrix: &[f64], shift: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) || matrix.len() != dim * dim || shift.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "affine velocity needs a {dim}x{dim} matrix and {dim} shift entries"
            )));
        }
        let mut m = Mat3::zeros();
        let mut b = Vec3::zeros();
        for i in 0..dim {
            b[i] = shift[i];
            for j in 0..dim {
                m[(i, j)] = matrix[i * dim + j];
            }
        }
        Ok(Self { dim, matrix: m, shift: b, perturbation: PerturbationKind::None, amplitude: 0.0 })
    }

    /// `u₀(x) = s·x` in `dim` dimensions.
    pub fn expanding(dim: usize, rate: f64) -> Self {
        let mut m = Mat3::zeros();
        for i in 0..dim.min(3) {
            m[(i, i)] = rate;
        }
        Self { dim, matrix: m, shift: Vec3::zeros(), perturbation: PerturbationKind::None, amplitude: 0.0 }
    }

    pub fn with_perturbation(mut self, kind: PerturbationKind, amplitude: f64) -> Self {
        self.perturbation = kind;
        self.amplitude = amplitude;
        self
    }

    pub fn is_affine(&self) -> bool {
        self.perturbation == PerturbationKind::None || self.amplitude == 0.0
    }

    fn mask(&self, x: &Vec3) -> Vec3 {
        let mut y = *x;
        for i in self.dim..3 {
            y[i] = 0.0;
        }
        y
    }

    pub fn value(&self, x: &Vec3) -> Vec3 {
        let x = self.mask(x);
        let mut u = self.matrix * x + self.shift;
        if !self.is_affine() {
            let f = match self.perturbation {
                PerturbationKind::SinBump => {
                    let g = (-0.5 * x.norm_squared()).exp();
                    x.map(|xi| xi.sin() * g)
                }
                PerturbationKind::Sine => x.map(f64::sin),
                PerturbationKind::None => Vec3::zeros(),
            };
            u += self.amplitude * self.mask(&f);
        }
        u
    }

    /// `G_ij = ∂_j u₀_i`.
    pub fn gradient(&self, x: &Vec3) -> Mat3 {
        let x = self.mask(x);
        let mut g = self.matrix;
        if !self.is_affine() {
            let nu = self.amplitude;
            match self.perturbation {
                PerturbationKind::SinBump => {
                    let e = (-0.5 * x.norm_squared()).exp();
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            let diag = if i == j { x[i].cos() } else { 0.0 };
                            g[(i, j)] += nu * e * (diag - x[j] * x[i].sin());
                        }
                    }
                }
                PerturbationKind::Sine => {
                    for i in 0..self.dim {
                        g[(i, i)] += nu * x[i].cos();
                    }
                }
                PerturbationKind::None => {}
            }
        }
        g
    }

    /// `∂_l G` for each `l`: `out[l][(i, j)] = ∂_l ∂_j u₀_i`.
    pub fn gradient_derivatives(&self, x: &Vec3) -> [Mat3; 3] {
        let x = self.mask(x);
        let mut out = [Mat3::zeros(); 3];
        if self.is_affine() {
            return out;
        }
        let nu = self.amplitude;
        let d = self.dim;
        match self.perturbation {
            PerturbationKind::SinBump => {
                let e = (-0.5 * x.norm_squared()).exp();
                let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                for l in 0..d {
                    for i in 0..d {
                        let (s, c) = x[i].sin_cos();
                        for j in 0..d {
                            let v = -s * kd(i, j) * kd(i, l) - c * kd(i, j) * x[l] - kd(j, l) * s
                                - x[j] * c * kd(i, l)
                                + x[j] * x[l] * s;
                            out[l][(i, j)] = nu * e * v;
                        }
                    }
                }
            }
            PerturbationKind::Sine => {
                for i in 0..d {
                    out[i][(i, i)] = -nu * x[i].sin();
                }
            }
            PerturbationKind::None => {}
        }
        out
    }

    /// Smallest distance from the spectrum of the active `d×d` block of `G`
    /// to the closed negative real half-line.
    pub fn spectral_distance(&self, x: &Vec3) -> f64 {
        let g = self.gradient(x);
        let eig: Vec<nalgebra::Complex<f64>> = match self.dim {
            1 => vec![nalgebra::Complex::new(g[(0, 0)], 0.0)],
            2 => g.fixed_view::<2, 2>(0, 0).into_owned().complex_eigenvalues().iter().copied().collect(),
            _ => g.complex_eigenvalues().iter().copied().collect(),
        };
        eig.iter()
            .map(|l| if l.re >= 0.0 { l.norm() } else { l.im.abs() })
            .fold(f64::INFINITY, f64::min)
    }

    /// Heuristic certificate of `Dist(Sp(∇u₀(x)), ℝ₋) ≥ κ` on sample points.
    pub fn check_spectral_condition(&self, kappa: f64, samples: &[Vec3]) -> Result<()> {
        for x in samples {
            let d = self.spectral_distance(x);
            if !(d >= kappa) {
                return Err(Error::SpectralCondition(format!(
                    "distance {d:.6e} < kappa {kappa:.6e} at {:?}",
                    x.as_slice()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundFlow {
    pub initial: InitialVelocity,
    pub newton: NewtonSettings,
}

impl BackgroundFlow {
    pub fn new(initial: InitialVelocity) -> Self {
        Self { initial, newton: NewtonSettings::default() }
    }

    pub fn dim(&self) -> usize {
        self.initial.dim
    }

    /// Foot `x₀` of the characteristic through `(t, x)`.
    pub fn foot(&self, t: f64, x: &Vec3) -> Result<Vec3> {
        let u0 = &self.initial;
        let x = u0.mask(x);
        let mut jac = Mat3::identity() + t * u0.matrix;
        let rhs = x - t * u0.shift;
        let affine_guess = jac
            .try_inverse_mut()
            .then(|| jac * rhs)
            .ok_or_else(|| Error::SpectralCondition(format!("I + t A singular at t={t}")))?;
        if u0.is_affine() {
            return Ok(affine_guess);
        }
        let residual = |y: &Vec3| u0.mask(&(y + t * u0.value(y) - x));
        let mut x0 = affine_guess;
        let mut r = residual(&x0);
        let scale = 1.0 + x.norm();
        for _ in 0..self.newton.max_iterations {
            if r.norm() <= self.newton.tolerance * scale {
                return Ok(x0);
            }
            let j = Mat3::identity() + t * u0.gradient(&x0);
            let step = j
                .try_inverse()
                .map(|ji| ji * r)
                .ok_or_else(|| Error::SpectralCondition(format!("I + t grad u0 singular at t={t}")))?;
            let mut damping = 1.0;
            loop {
                let cand = x0 - damping * step;
                let rc = residual(&cand);
                if rc.norm() < r.norm() || damping < 1e-6 {
                    x0 = cand;
                    r = rc;
                    break;
                }
                damping *= 0.5;
            }
        }
        if r.norm() <= self.newton.tolerance * scale {
            Ok(x0)
        } else {
            Err(Error::CharacteristicInversion { t, residual: r.norm() })
        }
    }

    pub fn eval(&self, t: f64, x: &Vec3) -> Result<Vec3> {
        let x0 = self.foot(t, x)?;
        Ok(self.initial.value(&x0))
    }

    /// `∂_j û_i` as a matrix.
    pub fn grad(&self, t: f64, x: &Vec3) -> Result<Mat3> {
        let x0 = self.foot(t, x)?;
        self.grad_at_foot(t, &x0)
    }

    fn grad_at_foot(&self, t: f64, x0: &Vec3) -> Result<Mat3> {
        let g = self.initial.gradient(x0);
        let m = (Mat3::identity() + t * g)
            .try_inverse()
            .ok_or_else(|| Error::SpectralCondition(format!("I + t grad u0 singular at t={t}")))?;
        Ok(m * g)
    }

    /// Value, gradient and second derivatives at one point.
    ///
    /// With `M = (I + tG)^{-1}`, differentiating `∇û = G M` along the
    /// characteristic map gives `∂_k ∇û = Σ_l M (∂_l G) M M_{lk}`.
    pub fn jet(&self, t: f64, x: &Vec3) -> Result<(Vec3, Mat3, Hessian)> {
        let x0 = self.foot(t, x)?;
        let u0 = &self.initial;
        let g = u0.gradient(&x0);
        let m = (Mat3::identity() + t * g)
            .try_inverse()
            .ok_or_else(|| Error::SpectralCondition(format!("I + t grad u0 singular at t={t}")))?;
        let grad = m * g;
        let mut hess = [Mat3::zeros(); 3];
        if !u0.is_affine() {
            let dg = u0.gradient_derivatives(&x0);
            // dk[k] = ∂_k ∇û
            let mut dk = [Mat3::zeros(); 3];
            for (l, dgl) in dg.iter().enumerate() {
                let core = m * dgl * m;
                for (k, d) in dk.iter_mut().enumerate() {
                    *d += core * m[(l, k)];
                }
            }
            for (i, h) in hess.iter_mut().enumerate() {
                for j in 0..3 {
                    for (k, d) in dk.iter().enumerate() {
                        h[(j, k)] = d[(i, j)];
                    }
                }
            }
        }
        Ok((u0.value(&x0), grad, hess))
    }

    /// `K(t, x) = (1+t)² (∇û − I/(1+t))`, restricted to the active block.
    pub fn k_matrix(&self, t: f64, x: &Vec3) -> Result<Mat3> {
        let mut id = Mat3::zeros();
        for i in 0..self.dim() {
            id[(i, i)] = 1.0;
        }
        Ok((1.0 + t) * (1.0 + t) * (self.grad(t, x)? - id / (1.0 + t)))
    }

    /// Supremum of the operator 2-norm of `K` over the sample set.
    pub fn k_matrix_bound(&self, times: &[f64], points: &[Vec3]) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for &t in times {
            for x in points {
                let k = self.k_matrix(t, x)?;
                let norm = k.singular_values().max();
                sup = sup.max(norm);
            }
        }
        Ok(sup)
    }
}

/// Uniform sample points in `[-half_width, half_width]^d` with `n` per axis.
pub fn box_samples(dim: usize, n: usize, half_width: f64) -> Vec<Vec3> {
    let coord = |i: usize| if n == 1 { 0.0 } else { -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64 };
    let mut out = Vec::new();
    let ny = if dim >= 2 { n } else { 1 };
    let nz = if dim >= 3 { n } else { 1 };
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..n {
                let mut x = Vec3::zeros();
                x[0] = coord(i);
                if dim >= 2 {
                    x[1] = coord(j);
                }
                if dim >= 3 {
                    x[2] = coord(k);
                }
                out.push(x);
            }
        }
    }
    out
}

/// Uniform times `0, t_max/(n−1), …, t_max`.
pub fn time_samples(t_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if n == 1 { 0.0 } else { t_max * i as f64 / (n - 1) as f64 }).collect()
}
