//! Viscous/inviscid comparison across a viscosity ladder.
//!
//! Every viscous run is differenced against one shared Euler run started
//! from the same data with the same grid, scheme and step sequence, so the
//! discretization error cancels to leading order and `W̄^ε = W^ε − W` exposes
//! the viscous deviation alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit;
use crate::grid::{self, Grid};
use crate::quad;
use crate::solver::{DtPolicy, Mode, Model, RunSettings, State};
use crate::{Error, Result};

/// Norms of a difference field `W̄ = (φ^ε − φ, v^ε − v)` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub t: f64,
    pub l2: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl ErrorNorms {
    /// `(|W̄|₂² + |W̄|²_{D¹})^{1/2}`.
    pub fn h1(&self) -> f64 {
        (self.l2 * self.l2 + self.d1 * self.d1).sqrt()
    }

    pub fn h2(&self) -> f64 {
        (self.l2 * self.l2 + self.d1 * self.d1 + self.d2 * self.d2).sqrt()
    }
}

pub fn difference_norms(grid: &Grid, a: &State, b: &State) -> ErrorNorms {
    let sound: Vec<f64> = a.sound.iter().zip(&b.sound).map(|(x, y)| x - y).collect();
    let vel: Vec<Vec<f64>> =
        a.vel.iter().zip(&b.vel).map(|(u, w)| u.iter().zip(w).map(|(x, y)| x - y).collect()).collect();
    let norm = |k: usize| {
        let mut s = grid::seminorm_sq(grid, &sound, k, None);
        for f in &vel {
            s += grid::seminorm_sq(grid, f, k, None);
        }
        s.sqrt()
    };
    ErrorNorms { t: a.t, l2: norm(0), d1: norm(1), d2: norm(2), d3: norm(3) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "detail")]
pub enum EntryStatus {
    Ok,
    BlownUp(f64),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub status: EntryStatus,
    /// One entry per sample time.
    pub norms: Vec<ErrorNorms>,
    pub clip_events: usize,
}

impl SweepEntry {
    fn sup(&self, f: impl Fn(&ErrorNorms) -> f64) -> f64 {
        self.norms.iter().map(f).fold(0.0, f64::max)
    }
}

/// Log–log slopes of the sup-in-time error norms against `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFits {
    pub l2: f64,
    pub d1: f64,
    /// `L² ∪ D¹` combined.
    pub h1: f64,
    pub d2: f64,
    pub d3: f64,
    /// `L² ∪ D¹ ∪ D²` combined.
    pub h2: f64,
    pub used: usize,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Viscous model; its `ε` is overridden per ladder entry.
    pub model: Model,
    pub initial: State,
    pub ladder: Vec<f64>,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    /// Shared step; defaults to the initial CFL step of the largest `ε`.
    pub dt: Option<f64>,
}

impl SweepConfig {
    /// Sample times `{0.25, 0.5, 1}·T`.
    pub fn default_samples(t_end: f64) -> Vec<f64> {
        vec![0.25 * t_end, 0.5 * t_end, t_end]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub ladder: Vec<f64>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub entries: Vec<SweepEntry>,
    pub rates: Option<RateFits>,
    pub fit_error: Option<String>,
}

impl SweepResult {
    /// CSV of `(epsilon, t, l2, d1, d2, d3)` rows in ladder order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,t,l2,d1,d2,d3\n");
        for e in &self.entries {
            for n in &e.norms {
                let row = [e.epsilon, n.t, n.l2, n.d1, n.d2, n.d3].map(|v| format!("{v:.16e}"));
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        out
    }
}

/// Runs the shared Euler run and every ladder entry in parallel, differences
/// them at the sample times and fits the rates.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    if config.ladder.len() < 3 {
        return Err(Error::InvalidParameter(format!("ladder needs at least 3 entries, got {}", config.ladder.len())));
    }
    if let Some(e) = config.ladder.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidParameter(format!("ladder entry {e} outside [0, 1]")));
    }
    let mut base = config.model.clone();
    base.options.mode = Mode::Viscous;
    let dt = match config.dt {
        Some(dt) => dt,
        None => {
            let eps_max = config.ladder.iter().cloned().fold(0.0, f64::max);
            let m = base.with_epsilon(eps_max);
            let bg = m.background(config.initial.t)?;
            m.cfl_dt(&config.initial, &bg)
        }
    };
    let settings = RunSettings {
        t_end: config.t_end,
        sample_times: config.sample_times.clone(),
        energy_times: vec![],
        dt: DtPolicy::Fixed(dt),
        track_dissipation: false,
    };

    let euler = base.euler();
    let jobs: Vec<Option<f64>> = std::iter::once(None).chain(config.ladder.iter().map(|&e| Some(e))).collect();
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|job| match job {
            None => euler.run(&config.initial, &settings),
            Some(eps) => base.with_epsilon(*eps).run(&config.initial, &settings),
        })
        .collect();
    let mut runs = runs.into_iter();
    let reference = runs.next().expect("euler job")?;

    let entries: Vec<SweepEntry> = config
        .ladder
        .iter()
        .zip(runs)
        .map(|(&epsilon, run)| match run {
            Ok(out) => SweepEntry {
                epsilon,
                status: EntryStatus::Ok,
                norms: out
                    .samples
                    .iter()
                    .zip(&reference.samples)
                    .map(|(a, b)| difference_norms(&base.grid, a, b))
                    .collect(),
                clip_events: out.stats.clip_events,
            },
            Err(Error::BlowUp { t }) => {
                log::warn!("ladder entry eps = {epsilon} blew up at t = {t}");
                SweepEntry { epsilon, status: EntryStatus::BlownUp(t), norms: vec![], clip_events: 0 }
            }
            Err(e) => {
                log::warn!("ladder entry eps = {epsilon} failed: {e}");
                SweepEntry { epsilon, status: EntryStatus::Failed(e.to_string()), norms: vec![], clip_events: 0 }
            }
        })
        .collect();

    let times = reference.samples.iter().map(|s| s.t).collect();
    let mut result =
        SweepResult { ladder: config.ladder.clone(), times, dt, entries, rates: None, fit_error: None };
    match fit_rates(&result.entries) {
        Ok(r) => result.rates = Some(r),
        Err(e) => result.fit_error = Some(e.to_string()),
    }
    Ok(result)
}

/// Slopes over entries that completed with `ε > 0` and nonzero error.
pub fn fit_rates(entries: &[SweepEntry]) -> Result<RateFits> {
    let usable: Vec<&SweepEntry> = entries
        .iter()
        .filter(|e| e.status == EntryStatus::Ok && e.epsilon > 0.0 && e.sup(|n| n.l2) > 0.0)
        .collect();
    if usable.len() < 3 {
        return Err(Error::Fit(format!("only {} usable ladder entries, need 3", usable.len())));
    }
    let eps: Vec<f64> = usable.iter().map(|e| e.epsilon).collect();
    let slope = |f: &dyn Fn(&ErrorNorms) -> f64| -> Result<f64> {
        let v: Vec<f64> = usable.iter().map(|e| e.sup(f)).collect();
        Ok(fit::power_law_fit(&eps, &v)?.0)
    };
    Ok(RateFits {
        l2: slope(&|n| n.l2)?,
        d1: slope(&|n| n.d1)?,
        h1: slope(&|n| n.h1())?,
        d2: slope(&|n| n.d2)?,
        d3: slope(&|n| n.d3)?,
        h2: slope(&|n| n.h2())?,
        used: usable.len(),
    })
}

/// Squared initial difference norms `|W̄₀|²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialDifference {
    pub l2_sq: f64,
    pub d1_sq: f64,
    pub d2_sq: f64,
}

/// Upper bounds on `|W̄(t)|₂²`, `|W̄(t)|²_{D¹}`, `|W̄(t)|²_{D²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub l2_sq: f64,
    pub d1_sq: f64,
    pub d2_sq: f64,
}

/// `∫₀ᵗ (1+s)^{p−1} ds` for `p = 7 − 4ι` or `5 − 4ι`: `|(1+t)^p − 1|/|p|`,
/// or `ln(1+t)` at `p = 0`.
fn growth(p: f64, t: f64) -> f64 {
    if p == 0.0 {
        (1.0 + t).ln()
    } else {
        ((1.0 + t).powf(p) - 1.0).abs() / p.abs()
    }
}

/// `∫₀ᵗ (1+s)^{1−4ι+C} ∫₀ˢ(1+r)^{4−4ι} dr ds`.
fn forcing_integral(iota: f64, c: f64, t: f64) -> f64 {
    let q = 5.0 - 4.0 * iota;
    let base = 1.0 - 4.0 * iota + c;
    if iota == 1.25 {
        quad::power_log_integral(base, t)
    } else {
        (quad::power_integral(base + q, t) - quad::power_integral(base, t)) / q
    }
}

/// Gronwall envelopes with constant `C = c` for the given exponent `ι ∈ (1, 2)`.
pub fn gronwall_envelope(w0: &InitialDifference, iota: f64, c: f64, eps: f64, t: f64) -> Result<Envelope> {
    if !(iota > 1.0 && iota < 2.0) {
        return Err(Error::InvalidParameter(format!("iota = {iota} outside (1, 2)")));
    }
    if !(t >= 0.0) || !(c >= 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidParameter("envelope needs t, C, eps >= 0".into()));
    }
    let grow = (1.0 + t).powf(c);
    let l2_sq = grow * (w0.l2_sq + c * eps * eps * growth(7.0 - 4.0 * iota, t));
    let d1_sq = grow * (w0.d1_sq + c * eps * eps * growth(5.0 - 4.0 * iota, t));
    let p = quad::power_integral(1.0 - 4.0 * iota + c, t);
    let f = forcing_integral(iota, c, t);
    let d2_sq = if iota < 1.5 {
        let pre = (c * ((1.0 + t).powf(3.0 - 2.0 * iota) - 1.0)).exp();
        pre * (w0.d2_sq + c * eps * (1.0 + f) + c * w0.d1_sq * p)
    } else {
        grow * (w0.d2_sq + c * w0.d1_sq * p + c * eps + c * eps * f)
    };
    Ok(Envelope { l2_sq, d1_sq, d2_sq })
}

fn bounded(entry: &SweepEntry, w0: &InitialDifference, iota: f64, c: f64) -> Result<bool> {
    for n in &entry.norms {
        let e = gronwall_envelope(w0, iota, c, entry.epsilon, n.t)?;
        if n.l2 * n.l2 > e.l2_sq || n.d1 * n.d1 > e.d1_sq || n.d2 * n.d2 > e.d2_sq {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub c04: f64,
    pub iota: f64,
    pub fitted_epsilon: f64,
    /// `(ε, bounded)` for every other completed entry.
    pub checks: Vec<(f64, bool)>,
}

impl EnvelopeFit {
    pub fn all_bounded(&self) -> bool {
        self.checks.iter().all(|&(_, ok)| ok)
    }
}

/// Smallest `C` whose envelopes bound the smallest positive-`ε` entry at every
/// sample time (bisection; the envelopes increase with `C`), then checks the
/// remaining entries against it.
pub fn fit_envelope(result: &SweepResult, w0: &InitialDifference, iota: f64) -> Result<EnvelopeFit> {
    let done: Vec<&SweepEntry> =
        result.entries.iter().filter(|e| e.status == EntryStatus::Ok && e.epsilon > 0.0).collect();
    let smallest = done
        .iter()
        .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
        .ok_or_else(|| Error::Fit("no completed ladder entry to fit".into()))?;
    let mut hi = 1.0;
    while !bounded(smallest, w0, iota, hi)? {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Fit("no envelope constant below 1e6 bounds the data".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if bounded(smallest, w0, iota, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let checks = done
        .iter()
        .filter(|e| e.epsilon != smallest.epsilon)
        .map(|e| Ok((e.epsilon, bounded(e, w0, iota, hi)?)))
        .collect::<Result<_>>()?;
    Ok(EnvelopeFit { c04: hi, iota, fitted_epsilon: smallest.epsilon, checks })
}
