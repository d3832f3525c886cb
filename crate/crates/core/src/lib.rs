//! Numerical laboratory for isentropic compressible Navier–Stokes with
//! degenerate viscosities `μ = εαρ^δ`, `λ = εβρ^δ` and vacuum.
//!
//! The flow is evolved in power-of-density variables
//!
//! * `φ = √(4Aγ/(γ−1)²) ρ^{(γ−1)/2}` (scaled sound speed),
//! * `ϕ = ρ^{(δ−1)/2}` (viscosity power),
//! * `v = u − û` (velocity deviation from a pressureless background flow `û`),
//!
//! so that vacuum never requires a division by density. Around the solver
//! sit the pieces needed to check the quantitative theory: derived exponents
//! and admissibility conditions ([`constants`]), the background flow
//! ([`background`]), admissible initial data ([`scenarios`]), the
//! time-weighted energy ([`energy`]), viscous/inviscid comparison sweeps
//! ([`harness`]) and the Bernoulli comparison ODE ([`ode`]).

pub mod background;
pub mod constants;
pub mod energy;
pub mod error;
pub mod fit;
pub mod grid;
pub mod harness;
pub mod ode;
pub mod quad;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
