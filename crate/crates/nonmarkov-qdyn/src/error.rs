//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureNonConvergence { residual: f64, tolerance: f64 },

    #[error("root finder did not converge in bracket [{lo}, {hi}]")]
    RootNonConvergence { lo: f64, hi: f64 },

    #[error("occupation pole: bosonic occupation diverges at epsilon {epsilon} <= mu {mu}")]
    OccupationPole { epsilon: f64, mu: f64 },

    #[error("frequency {omega} is inside the spectral support [{lo}, {hi}]; use the density-of-states path")]
    InsideSupport { omega: f64, lo: f64, hi: f64 },

    #[error("frequency {omega} is outside the spectral support [{lo}, {hi}]")]
    OutsideSupport { omega: f64, lo: f64, hi: f64 },

    #[error("propagator instability: |u| = {abs_u:.6} > 1 at t = {t}; reduce dt")]
    PropagatorInstability { t: f64, abs_u: f64 },

    #[error("time-grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Fock truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("steady state not reached by the horizon t = {horizon}; raise the horizon")]
    Inconclusive { horizon: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}
