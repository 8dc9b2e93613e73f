//! Error type shared by all modules.

use thiserror::Error;

/// Failure modes surfaced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive ODE integrator could not reach the requested time.
    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// Fixed-point iteration failed to contract.
    #[error("fixed-point iteration not contracting: {0}")]
    NonContraction(String),

    /// The flow map degenerated (non-invertible deformation gradient).
    #[error("degenerate flow map: {0}")]
    DegenerateMap(String),

    /// A time-stepping run aborted (CFL collapse, a priori blow-up, ...).
    #[error("evolution aborted at tau = {tau}: {reason}")]
    Evolution { tau: f64, reason: String },

    /// Requested evaluation outside tabulated data.
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
