use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration failed at z/L = {z_over_l}: {reason}")]
    IntegrationFailure { z_over_l: f64, reason: String },

    #[error(
        "transfer-matrix oracle overflowed at kappa_n L = {kappa_n_l}; \
         use the log-derivative integrator for large couplings"
    )]
    OracleOverflow { kappa_n_l: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("no classical turning point for k/kappa_n = {k_over_kappa_n}: the atom passes over the barrier")]
    NoTurningPoint { k_over_kappa_n: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error(
        "window too coarse: predicted resonance at kappa_n L = {position} has no detected peak"
    )]
    WindowTooCoarse { position: f64 },

    #[error("photon distribution is not normalizable below n = {n_max}")]
    NonNormalizable { n_max: usize },

    #[error("negative probability {value} at n = {n}; step size too large")]
    NegativeProbability { n: usize, value: f64 },

    #[error(
        "exact integration needs about {estimated_steps:.3e} steps per point (limit {limit:.1e}); \
         use the auto or semiclassical engine"
    )]
    EngineInfeasible { estimated_steps: f64, limit: f64 },
}
