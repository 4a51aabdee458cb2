//! Scattering of ultracold two-level atoms by a resonant cavity field mode.
//!
//! The atom–field problem decouples in the dressed basis into a barrier
//! channel (`+`) and a well channel (`-`) for each photon number. This crate
//! computes the channel reflection and transmission amplitudes exactly (by
//! integrating the stationary Schrödinger equation) and through a chain of
//! semiclassical approximations, locates transmission resonances, and feeds
//! the resulting emission probabilities into the micromaser master equation.
//!
//! All lengths are measured in units of the cavity length `L`; wavenumbers
//! appear as the products `kL` and `kappa_n L`.

pub mod engine;
pub mod error;
pub mod mesa;
pub mod numeric;
pub mod photon;
pub mod profile;
pub mod resonance;
pub mod scattering;
pub mod semiclassical;
pub mod special;

pub use engine::{
    evaluate_point, evaluate_points, photon_number_curve, scattering_steady_state, Engine,
    EngineOptions, EngineUsed, PointResult,
};
pub use error::{Error, Result};
pub use profile::{ModeProfile, TurningPoint};
pub use scattering::{
    amplitudes_from_logderivs, outcome_probabilities, rabi_wavenumber, Channel, ChannelAmplitudes,
    LogDerivativePair, OutcomeProbabilities, ScatteringParams,
};
