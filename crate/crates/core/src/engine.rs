//! Engine selection for a single scattering point.
//!
//! `ExactNumeric` always integrates the channel equation. `Semiclassical`
//! uses tunnelling through the barrier (with the edge treated as a linear
//! ramp unless the plain WKB form is requested) and the `xi`-dependent closed
//! forms for the well channel. `Auto` integrates while the estimated step
//! count stays below a limit and switches to the semiclassical forms beyond.
//! The mesa mode has an exact closed form, which both `Semiclassical` and
//! `Auto` use.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesa::mesa_logderivs_exact;
use crate::numeric::{estimated_steps, solve_even_odd, IntegratorConfig};
use crate::photon::{steady_state_adaptive, PhotonDistribution};
use crate::profile::ModeProfile;
use crate::scattering::{
    amplitudes_from_logderivs, outcome_probabilities, Channel, ChannelAmplitudes,
    LogDerivativePair, OutcomeProbabilities, ScatteringParams,
};
use crate::semiclassical::{
    barrier_logderivs, edge_barrier_logderivs, large_xi_amplitudes, small_xi_amplitudes,
    well_logderivs, SemiclassicalPoint, XiRegime,
};

/// Per-point step estimate above which `Auto` leaves the integrator.
pub const AUTO_STEP_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    ExactNumeric,
    Semiclassical,
    Auto,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::ExactNumeric => "exact",
            Engine::Semiclassical => "semiclassical",
            Engine::Auto => "auto",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" | "exact_numeric" | "numeric" => Ok(Engine::ExactNumeric),
            "semiclassical" | "wkb" => Ok(Engine::Semiclassical),
            "auto" => Ok(Engine::Auto),
            other => Err(Error::InvalidParameter(format!("unknown engine `{other}`"))),
        }
    }
}

/// The method that actually produced a channel's amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineUsed {
    ExactNumeric,
    MesaClosedForm,
    WkbBarrier,
    EdgeBarrier,
    SmallXi,
    MatchedXi,
    LargeXi,
}

impl EngineUsed {
    pub fn label(self) -> &'static str {
        match self {
            EngineUsed::ExactNumeric => "exact",
            EngineUsed::MesaClosedForm => "mesa_closed_form",
            EngineUsed::WkbBarrier => "wkb_barrier",
            EngineUsed::EdgeBarrier => "edge_barrier",
            EngineUsed::SmallXi => "small_xi",
            EngineUsed::MatchedXi => "matched_xi",
            EngineUsed::LargeXi => "large_xi",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, EngineUsed::ExactNumeric | EngineUsed::MesaClosedForm)
    }
}

impl From<XiRegime> for EngineUsed {
    fn from(r: XiRegime) -> Self {
        match r {
            XiRegime::Small => EngineUsed::SmallXi,
            XiRegime::Matched => EngineUsed::MatchedXi,
            XiRegime::Large => EngineUsed::LargeXi,
        }
    }
}

/// Semiclassical treatment of the sinusoidal barrier channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierModel {
    /// `-k(1 ∓ Theta)`: right transmission, but the reflection phase misses the edge ramp.
    Wkb,
    /// Linear-ramp matching at the edge; reduces to `Wkb` where the ramp is negligible.
    #[default]
    LinearEdge,
}

impl FromStr for BarrierModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "wkb" => Ok(BarrierModel::Wkb),
            "linear_edge" | "edge" => Ok(BarrierModel::LinearEdge),
            other => Err(Error::InvalidParameter(format!(
                "unknown barrier model `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub integrator: IntegratorConfig,
    /// `Auto` integrates only below this many estimated steps per channel.
    pub auto_step_limit: f64,
    /// `ExactNumeric` refuses points estimated above this many steps.
    pub exact_step_limit: f64,
    pub barrier: BarrierModel,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            integrator: IntegratorConfig::default(),
            auto_step_limit: AUTO_STEP_LIMIT,
            exact_step_limit: f64::INFINITY,
            barrier: BarrierModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSolution {
    pub amplitudes: ChannelAmplitudes,
    pub pair: LogDerivativePair,
    pub engine: EngineUsed,
    /// False only when the integrator's step-halving check did not settle.
    pub converged: bool,
}

/// Amplitudes of one channel with the requested engine.
pub fn solve_channel(
    engine: Engine,
    params: &ScatteringParams,
    options: &EngineOptions,
) -> Result<ChannelSolution> {
    let steps = estimated_steps(params, &options.integrator);
    let use_exact = match engine {
        Engine::ExactNumeric => {
            if steps > options.exact_step_limit {
                return Err(Error::EngineInfeasible {
                    estimated_steps: steps,
                    limit: options.exact_step_limit,
                });
            }
            true
        }
        Engine::Semiclassical => false,
        Engine::Auto => {
            params.profile == ModeProfile::Sinusoidal && steps <= options.auto_step_limit
        }
    };
    if use_exact {
        return exact(params, options);
    }
    let (k, c) = (params.k_l, params.kappa_n_l());
    match (params.profile, params.channel) {
        (ModeProfile::Mesa, ch) => {
            let pair = mesa_logderivs_exact(ch, k, c)?;
            Ok(closed(pair, k, EngineUsed::MesaClosedForm))
        }
        (ModeProfile::Sinusoidal, Channel::Plus) => {
            let barrier = match options.barrier {
                BarrierModel::Wkb => {
                    barrier_logderivs(params.profile, k, c).map(|p| (p, EngineUsed::WkbBarrier))
                }
                BarrierModel::LinearEdge => edge_barrier_logderivs(params.profile, k, c)
                    .map(|p| (p, EngineUsed::EdgeBarrier)),
            };
            match barrier {
                Ok((pair, used)) => Ok(closed(pair, k, used)),
                // above the barrier there is nothing to tunnel through; Auto integrates instead
                Err(Error::NoTurningPoint { .. }) if engine == Engine::Auto => {
                    exact(params, options)
                }
                Err(e) => Err(e),
            }
        }
        (ModeProfile::Sinusoidal, Channel::Minus) => {
            let point = SemiclassicalPoint::new(params.profile, k, c)?;
            let (pair, regime) = well_logderivs(&point)?;
            let amplitudes = match regime {
                XiRegime::Small => small_xi_amplitudes(&point),
                XiRegime::Large => large_xi_amplitudes(&point),
                XiRegime::Matched => amplitudes_from_logderivs(pair, k),
            };
            Ok(ChannelSolution {
                amplitudes,
                pair,
                engine: regime.into(),
                converged: true,
            })
        }
    }
}

fn closed(pair: LogDerivativePair, k_l: f64, engine: EngineUsed) -> ChannelSolution {
    ChannelSolution {
        amplitudes: amplitudes_from_logderivs(pair, k_l),
        pair,
        engine,
        converged: true,
    }
}

fn exact(params: &ScatteringParams, options: &EngineOptions) -> Result<ChannelSolution> {
    let s = solve_even_odd(params, &options.integrator)?;
    Ok(ChannelSolution {
        amplitudes: s.amplitudes(params.k_l),
        pair: s.pair,
        engine: EngineUsed::ExactNumeric,
        converged: s.converged,
    })
}

/// Both channels and the four outcome probabilities at one `(kL, kappa_n L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub k_l: f64,
    pub kappa_n_l: f64,
    pub plus: ChannelSolution,
    pub minus: ChannelSolution,
    pub probabilities: OutcomeProbabilities,
}

impl PointResult {
    pub fn converged(&self) -> bool {
        self.plus.converged && self.minus.converged
    }

    /// Label for metadata: the two channel methods, joined when they differ.
    pub fn engine_label(&self) -> String {
        if self.plus.engine == self.minus.engine {
            self.plus.engine.label().to_string()
        } else {
            format!("{}+{}", self.plus.engine.label(), self.minus.engine.label())
        }
    }
}

pub fn evaluate_point(
    engine: Engine,
    profile: ModeProfile,
    k_l: f64,
    kappa_n_l: f64,
    options: &EngineOptions,
) -> Result<PointResult> {
    let plus = ScatteringParams::from_channel_coupling(k_l, kappa_n_l, Channel::Plus, profile)?;
    let minus = ScatteringParams {
        channel: Channel::Minus,
        ..plus
    };
    let plus = solve_channel(engine, &plus, options)?;
    let minus = solve_channel(engine, &minus, options)?;
    Ok(PointResult {
        k_l,
        kappa_n_l,
        probabilities: outcome_probabilities(&plus.amplitudes, &minus.amplitudes),
        plus,
        minus,
    })
}

/// Evaluates many `(kL, kappa_n L)` points in parallel; output order follows the input.
pub fn evaluate_points(
    engine: Engine,
    profile: ModeProfile,
    points: &[(f64, f64)],
    options: &EngineOptions,
) -> Result<Vec<PointResult>> {
    points
        .par_iter()
        .map(|&(k, c)| evaluate_point(engine, profile, k, c, options))
        .collect()
}

/// Outcome probabilities for every photon number at fixed `kL` and vacuum coupling `kappa L`.
pub fn photon_number_curve(
    engine: Engine,
    profile: ModeProfile,
    k_l: f64,
    kappa_l: f64,
    photons: std::ops::Range<u32>,
    options: &EngineOptions,
) -> Result<Vec<OutcomeProbabilities>> {
    let points: Vec<(f64, f64)> = photons
        .map(|n| (k_l, crate::scattering::rabi_wavenumber(kappa_l, n)))
        .collect();
    Ok(evaluate_points(engine, profile, &points, options)?
        .into_iter()
        .map(|p| p.probabilities)
        .collect())
}

/// Stationary photon distribution with the emission probabilities of this
/// mode as gain; the gain curve grows with the truncation, and every
/// scattering point is returned alongside.
pub fn scattering_steady_state(
    engine: Engine,
    profile: ModeProfile,
    k_l: f64,
    kappa_l: f64,
    n_ex: f64,
    n_b: f64,
    options: &EngineOptions,
) -> Result<(PhotonDistribution, Vec<PointResult>)> {
    let mut points: Vec<PointResult> = Vec::new();
    let (dist, _) = steady_state_adaptive(n_ex, n_b, |range| {
        let grid: Vec<(f64, f64)> = range
            .map(|n| (k_l, crate::scattering::rabi_wavenumber(kappa_l, n as u32)))
            .collect();
        let block = evaluate_points(engine, profile, &grid, options)?;
        let gain = block.iter().map(|p| p.probabilities.emission()).collect();
        points.extend(block);
        Ok(gain)
    })?;
    Ok((dist, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesa::mesa_amplitudes;
    use std::f64::consts::PI;

    #[test]
    fn parse_names() {
        assert_eq!("exact".parse::<Engine>().unwrap(), Engine::ExactNumeric);
        assert_eq!(
            "Exact-Numeric".parse::<Engine>().unwrap(),
            Engine::ExactNumeric
        );
        assert_eq!(
            "semiclassical".parse::<Engine>().unwrap(),
            Engine::Semiclassical
        );
        assert_eq!("auto".parse::<Engine>().unwrap(), Engine::Auto);
        assert!("fast".parse::<Engine>().is_err());
    }

    #[test]
    fn mesa_engines_agree() {
        let opts = EngineOptions::default();
        let (k, c) = (0.5, 30.0);
        let a = evaluate_point(Engine::ExactNumeric, ModeProfile::Mesa, k, c, &opts).unwrap();
        let b = evaluate_point(Engine::Auto, ModeProfile::Mesa, k, c, &opts).unwrap();
        assert_eq!(a.minus.engine, EngineUsed::ExactNumeric);
        assert_eq!(b.minus.engine, EngineUsed::MesaClosedForm);
        assert!((a.probabilities.emission() - b.probabilities.emission()).abs() < 1e-8);
        let m = mesa_amplitudes(Channel::Minus, k, c).unwrap();
        assert!((b.minus.amplitudes.t - m.t).norm() < 1e-15);
    }

    #[test]
    fn auto_switches_on_step_estimate() {
        let opts = EngineOptions::default();
        let c0 = 30000.0 * PI;
        let p = evaluate_point(
            Engine::Auto,
            ModeProfile::Sinusoidal,
            0.01 * c0,
            c0 * 2f64.sqrt(),
            &opts,
        )
        .unwrap();
        assert_eq!(p.plus.engine, EngineUsed::EdgeBarrier);
        assert_eq!(p.minus.engine, EngineUsed::LargeXi);
        let q = evaluate_point(Engine::Auto, ModeProfile::Sinusoidal, 3.0, 300.0, &opts).unwrap();
        assert_eq!(q.engine_label(), "exact");
    }

    #[test]
    fn edge_barrier_fixes_emission() {
        let wkb = EngineOptions {
            barrier: BarrierModel::Wkb,
            ..Default::default()
        };
        let edge = EngineOptions::default();
        for c in [100.0 * PI, 800.0, 3000.0] {
            let k = 0.01 * c;
            let ex =
                evaluate_point(Engine::ExactNumeric, ModeProfile::Sinusoidal, k, c, &edge).unwrap();
            let a = evaluate_point(Engine::Semiclassical, ModeProfile::Sinusoidal, k, c, &edge)
                .unwrap();
            let b =
                evaluate_point(Engine::Semiclassical, ModeProfile::Sinusoidal, k, c, &wkb).unwrap();
            assert_eq!(a.plus.engine, EngineUsed::EdgeBarrier);
            assert_eq!(b.plus.engine, EngineUsed::WkbBarrier);
            let pe = ex.probabilities.emission();
            assert!((a.probabilities.emission() - pe).abs() < 0.02, "{c}");
            assert!((b.probabilities.emission() - pe).abs() > 0.2, "{c}");
            // transmission does not see the reflection phase
            let te = ex.probabilities.transmission();
            assert!((a.probabilities.transmission() - te).abs() < 0.02);
            assert!((b.probabilities.transmission() - te).abs() < 0.02);
        }
        assert_eq!("wkb".parse::<BarrierModel>().unwrap(), BarrierModel::Wkb);
        assert_eq!(
            "linear-edge".parse::<BarrierModel>().unwrap(),
            BarrierModel::LinearEdge
        );
    }

    #[test]
    fn exact_refuses_beyond_limit() {
        let opts = EngineOptions {
            exact_step_limit: AUTO_STEP_LIMIT,
            ..Default::default()
        };
        let c0 = 30000.0 * PI;
        let err = evaluate_point(
            Engine::ExactNumeric,
            ModeProfile::Sinusoidal,
            0.01 * c0,
            c0 * 2f64.sqrt(),
            &opts,
        );
        assert!(matches!(err, Err(Error::EngineInfeasible { .. })));
    }

    #[test]
    fn semiclassical_above_barrier() {
        let opts = EngineOptions::default();
        let err = evaluate_point(
            Engine::Semiclassical,
            ModeProfile::Sinusoidal,
            20.0,
            10.0,
            &opts,
        );
        assert!(matches!(err, Err(Error::NoTurningPoint { .. })));
        let small = EngineOptions {
            auto_step_limit: 0.0,
            ..Default::default()
        };
        let p = evaluate_point(Engine::Auto, ModeProfile::Sinusoidal, 20.0, 10.0, &small).unwrap();
        assert_eq!(p.plus.engine, EngineUsed::ExactNumeric);
        assert_eq!(p.minus.engine, EngineUsed::SmallXi);
        assert_eq!(p.engine_label(), "exact+small_xi");
    }

    #[test]
    fn parallel_order_is_preserved() {
        let opts = EngineOptions::default();
        let pts: Vec<(f64, f64)> = (1..40).map(|i| (0.3, i as f64)).collect();
        let out = evaluate_points(Engine::Auto, ModeProfile::Sinusoidal, &pts, &opts).unwrap();
        for (p, r) in pts.iter().zip(&out) {
            assert_eq!(p.1, r.kappa_n_l);
            let one =
                evaluate_point(Engine::Auto, ModeProfile::Sinusoidal, p.0, p.1, &opts).unwrap();
            assert_eq!(one.probabilities, r.probabilities);
        }
    }

    #[test]
    fn mesa_steady_state_peaks() {
        let kappa_l = 99.0 * PI / 3f64.powf(0.25);
        let (p, points) = scattering_steady_state(
            Engine::Auto,
            ModeProfile::Mesa,
            0.01 * kappa_l,
            kappa_l,
            1000.0,
            1.0,
            &EngineOptions::default(),
        )
        .unwrap();
        assert_eq!(p.len(), points.len() + 1);
        assert!((p.total() - 1.0).abs() < 1e-12);
        assert_eq!(p.peaks(crate::photon::VISIBLE_PEAK), vec![3, 12]);
        assert!(points
            .iter()
            .all(|q| q.minus.engine == EngineUsed::MesaClosedForm));
    }

    #[test]
    fn photon_curve_uses_rabi_scaling() {
        let opts = EngineOptions::default();
        let c = 99.0 * PI / 3f64.powf(0.25);
        let curve =
            photon_number_curve(Engine::Auto, ModeProfile::Mesa, 0.01 * c, c, 0..4, &opts).unwrap();
        let direct = evaluate_point(
            Engine::Auto,
            ModeProfile::Mesa,
            0.01 * c,
            crate::rabi_wavenumber(c, 2),
            &opts,
        )
        .unwrap();
        assert!((crate::rabi_wavenumber(c, 2) - 99.0 * PI).abs() < 1e-12);
        assert_eq!(curve[2], direct.probabilities);
    }
}
