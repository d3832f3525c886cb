//! The Bernoulli comparison equation
//!
//! ```text
//! Z' + b/(1+t) Z = C1 (1+t)^{D1} Z^a + C2 (1+t)^{D2} Z,   Z(0) = Z0,
//! ```
//!
//! solved in closed form through `w = Z^{1−a}` and by RK4 as a cross-check.
//! With `μ(t) = (1+t)^{−b} exp(C2 ∫₀ᵗ (1+s)^{D2} ds)` and
//! `I(t) = ∫₀ᵗ (1+s)^{D1} μ(s)^{a−1} ds`,
//!
//! ```text
//! Z(t) = μ(t) [Z0^{1−a} − (a−1) C1 I(t)]^{−1/(a−1)},
//! ```
//!
//! so the solution is global iff `Z0 ≤ Λ = [(a−1) C1 I(∞)]^{−1/(a−1)}`.

use serde::{Deserialize, Serialize};

use crate::constants::DerivedConstants;
use crate::quad;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeParams {
    pub b: f64,
    /// Nonlinearity exponent, `> 1`.
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
    pub z0: f64,
}

impl OdeParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.b, self.a, self.c1, self.c2, self.d1, self.d2, self.z0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite ODE parameter".into()));
        }
        if !(self.a > 1.0) {
            return Err(Error::InvalidParameter(format!("exponent a = {} must exceed 1", self.a)));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 || self.z0 < 0.0 {
            return Err(Error::InvalidParameter("C1, C2 and Z0 must be nonnegative".into()));
        }
        Ok(())
    }

    /// The instance produced by the energy estimate: `a = 3`, `b = ι`,
    /// `D1 = 1 + ε*`, `D2 = −1 − ε*`.
    pub fn from_constants(dc: &DerivedConstants, c1: f64, c2: f64, z0: f64) -> Self {
        Self { b: dc.iota, a: 3.0, c1, c2, d1: 1.0 + dc.eps_star, d2: -1.0 - dc.eps_star, z0 }
    }

    fn rhs(&self, t: f64, z: f64) -> f64 {
        let s = 1.0 + t;
        -self.b / s * z + self.c1 * s.powf(self.d1) * z.powf(self.a) + self.c2 * s.powf(self.d2) * z
    }
}

/// Left side of the exponent condition `1 + ε* − 2ι < −1` for the energy instance.
pub fn key_exponent(dc: &DerivedConstants) -> f64 {
    1.0 + dc.eps_star - 2.0 * dc.iota
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub params: OdeParams,
    /// Global-existence threshold `Λ` (infinite when `C1 = 0`).
    pub lambda: f64,
    pub global: bool,
    pub blow_up: Option<f64>,
    /// Whether `I(∞)` is finite.
    pub tail_integrable: bool,
}

impl OdeSolution {
    /// `μ(t)`.
    pub fn mu(&self, t: f64) -> f64 {
        let p = &self.params;
        (1.0 + t).powf(-p.b) * (p.c2 * quad::power_integral(p.d2, t)).exp()
    }

    /// `I(t)`.
    pub fn integral(&self, t: f64) -> Result<f64> {
        integral(&self.params, t)
    }

    /// `Z0^{1−a} − (a−1) C1 I(t)`.
    pub fn bracket(&self, t: f64) -> Result<f64> {
        let p = &self.params;
        Ok(p.z0.powf(1.0 - p.a) - (p.a - 1.0) * p.c1 * self.integral(t)?)
    }

    /// Closed-form `Z(t)`; fails with the blow-up time past `t*`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let p = &self.params;
        if p.z0 == 0.0 {
            return Ok(0.0);
        }
        if let Some(ts) = self.blow_up {
            if t >= ts {
                return Err(Error::BlowUp { t: ts });
            }
        }
        let br = self.bracket(t)?;
        if !(br > 0.0) {
            return Err(Error::BlowUp { t });
        }
        Ok(self.mu(t) * br.powf(-1.0 / (p.a - 1.0)))
    }
}

/// `(1+s)^{D1} μ(s)^{a−1}` is `(1+s)^{exponent}` times `exp((a−1) C2 K(s))`.
fn tail_exponent(p: &OdeParams) -> f64 {
    if p.d2 == -1.0 {
        p.d1 - (p.a - 1.0) * (p.b - p.c2)
    } else {
        p.d1 - (p.a - 1.0) * p.b
    }
}

/// Whether the integrand reduces to a pure power.
fn pure_power(p: &OdeParams) -> bool {
    p.c2 == 0.0 || p.d2 == -1.0
}

fn integrand(p: &OdeParams, s: f64) -> f64 {
    let mu = (1.0 + s).powf(-p.b) * (p.c2 * quad::power_integral(p.d2, s)).exp();
    (1.0 + s).powf(p.d1) * mu.powf(p.a - 1.0)
}

fn integral(p: &OdeParams, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    if pure_power(p) {
        return Ok(quad::power_integral(tail_exponent(p), t));
    }
    quad::adaptive_simpson(|s| integrand(p, s), 0.0, t, 1e-13 * (1.0 + t))
}

/// `I(∞)`, or `None` when the tail is not integrable.
fn integral_infinity(p: &OdeParams) -> Result<Option<f64>> {
    let e = tail_exponent(p);
    if pure_power(p) {
        return Ok((e < -1.0).then(|| -1.0 / (e + 1.0)));
    }
    // C2 > 0 and D2 ≠ −1.
    if p.d2 > -1.0 || e >= -1.0 {
        return Ok(None);
    }
    let k_inf = p.c2 / (-p.d2 - 1.0);
    let tail = |s: f64| {
        let base = (1.0 + s).powf(e + 1.0) / (-e - 1.0);
        let lo = base * ((p.a - 1.0) * p.c2 * quad::power_integral(p.d2, s)).exp();
        let hi = base * ((p.a - 1.0) * k_inf).exp();
        (lo, hi)
    };
    quad::improper_integral(|s| integrand(p, s), tail, 1e-10).map(Some)
}

/// Closed-form solution, threshold and blow-up time.
pub fn solve_closed_form(p: &OdeParams) -> Result<OdeSolution> {
    p.validate()?;
    let i_inf = integral_infinity(p)?;
    let tail_integrable = i_inf.is_some();
    let lambda = if p.c1 == 0.0 {
        f64::INFINITY
    } else {
        match i_inf {
            Some(i) => ((p.a - 1.0) * p.c1 * i).powf(-1.0 / (p.a - 1.0)),
            None => {
                log::warn!("comparison integral diverges; threshold is zero");
                0.0
            }
        }
    };
    let global = p.z0 == 0.0 || p.c1 == 0.0 || p.z0 <= lambda;
    let mut sol = OdeSolution { params: *p, lambda, global, blow_up: None, tail_integrable };
    if !global {
        sol.blow_up = Some(blow_up_time(&sol)?);
    }
    Ok(sol)
}

/// Root of the bracket by doubling then bisection to `1e-10` relative.
fn blow_up_time(sol: &OdeSolution) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while sol.bracket(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Fit("blow-up time beyond search range".into()));
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if sol.bracket(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericTrajectory {
    /// Grid times `k·dt` reached before any blow-up.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub blow_up: Option<f64>,
}

const BLOW_UP_LEVEL: f64 = 1e12;

/// RK4 on the grid `k·dt`. A step whose result is non-finite or changes `Z`
/// by more than half is halved; blow-up is reported once the substep falls
/// below `dt·2^{−30}` or `Z` exceeds `1e12`.
pub fn solve_numeric(p: &OdeParams, t_end: f64, dt: f64) -> Result<NumericTrajectory> {
    p.validate()?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidParameter("numeric ODE needs dt > 0 and t_end >= 0".into()));
    }
    let rk4 = |t: f64, z: f64, h: f64| {
        let k1 = p.rhs(t, z);
        let k2 = p.rhs(t + 0.5 * h, z + 0.5 * h * k1);
        let k3 = p.rhs(t + 0.5 * h, z + 0.5 * h * k2);
        let k4 = p.rhs(t + h, z + h * k3);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let steps = (t_end / dt).round() as usize;
    let mut out = NumericTrajectory { times: vec![0.0], values: vec![p.z0], blow_up: None };
    let mut z = p.z0;
    let min_h = dt * 2f64.powi(-30);
    for k in 0..steps {
        let target = (k + 1) as f64 * dt;
        let mut t = k as f64 * dt;
        let mut h = dt;
        while t < target {
            h = h.min(target - t);
            let next = rk4(t, z, h);
            let ok = next.is_finite() && (next - z).abs() <= 0.5 * z.abs().max(f64::MIN_POSITIVE);
            if ok || (z == 0.0 && next == 0.0) {
                t += h;
                z = next;
                if z > BLOW_UP_LEVEL {
                    out.blow_up = Some(t);
                    return Ok(out);
                }
            } else {
                h *= 0.5;
                if h < min_h {
                    out.blow_up = Some(t);
                    return Ok(out);
                }
            }
        }
        out.times.push(target);
        out.values.push(z);
    }
    Ok(out)
}
