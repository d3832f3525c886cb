use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate denominator in {0}")]
    DivisionByZero(&'static str),

    #[error("characteristic inversion did not converge at t={t}: residual {residual:e}")]
    CharacteristicInversion { t: f64, residual: f64 },

    #[error("spectral condition violated: {0}")]
    SpectralCondition(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("density support reaches the boundary collar at t={t}")]
    MarginViolation { t: f64 },

    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("blow-up detected at t={t}")]
    BlowUp { t: f64 },

    #[error("fit failure: {0}")]
    Fit(String),

    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
}
