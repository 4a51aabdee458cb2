//! Closed-form solution for the mesa (constant) mode.
//!
//! Inside the cavity the channel wavenumber is constant, so the even and odd
//! eigensolutions are trigonometric (well, or barrier above threshold) or
//! hyperbolic (barrier below threshold) and their edge log-derivatives are
//! explicit. These serve as the reference for the integrator and as the
//! mesa curves of every sweep.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::scattering::{amplitudes_from_logderivs, Channel, ChannelAmplitudes, LogDerivativePair};

/// Below this half-width argument `tanh` and `coth` are replaced by their series.
const SERIES_ARGUMENT: f64 = 1e-4;

/// Exact edge log-derivatives for the mesa mode.
pub fn mesa_logderivs_exact(
    channel: Channel,
    k_l: f64,
    kappa_n_l: f64,
) -> Result<LogDerivativePair> {
    check_inputs(k_l, kappa_n_l)?;
    let k2 = k_l * k_l;
    let c2 = kappa_n_l * kappa_n_l;
    Ok(match channel {
        Channel::Minus => oscillatory((k2 + c2).sqrt()),
        Channel::Plus if k2 >= c2 => oscillatory((k2 - c2).sqrt()),
        Channel::Plus => evanescent((c2 - k2).sqrt()),
    })
}

/// The `k << kappa_n` limits: the interior wavenumber is replaced by `kappa_n`.
pub fn mesa_logderivs_small_k(channel: Channel, kappa_n_l: f64) -> Result<LogDerivativePair> {
    check_inputs(1.0, kappa_n_l)?;
    Ok(match channel {
        Channel::Minus => oscillatory(kappa_n_l),
        Channel::Plus => evanescent(kappa_n_l),
    })
}

/// Channel amplitudes for the mesa mode from the exact log-derivatives.
pub fn mesa_amplitudes(channel: Channel, k_l: f64, kappa_n_l: f64) -> Result<ChannelAmplitudes> {
    mesa_logderivs_exact(channel, k_l, kappa_n_l).map(|pair| amplitudes_from_logderivs(pair, k_l))
}

fn check_inputs(k_l: f64, kappa_n_l: f64) -> Result<()> {
    if !(k_l > 0.0 && k_l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kL must be positive and finite, got {k_l}"
        )));
    }
    if !(kappa_n_l >= 0.0 && kappa_n_l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kappa_n L must be nonnegative and finite, got {kappa_n_l}"
        )));
    }
    Ok(())
}

/// `cos(qz)` and `sin(qz)` read at `z = -1/2`; a node at the edge is clamped, not divided.
fn oscillatory(q: f64) -> LogDerivativePair {
    let (s, c) = (0.5 * q).sin_cos();
    if q == 0.0 {
        return LogDerivativePair::new(0.0, -2.0);
    }
    LogDerivativePair::from_edge_values((c, q * s), (-s, q * c))
}

/// `cosh(kz)` and `sinh(kz)` read at `z = -1/2`.
fn evanescent(kappa: f64) -> LogDerivativePair {
    let x = 0.5 * kappa;
    if x < SERIES_ARGUMENT {
        // kappa tanh(x) = 2x^2 (1 - x^2/3), kappa coth(x) = 2 (1 + x^2/3)
        let x2 = x * x;
        return LogDerivativePair::new(-2.0 * x2 * (1.0 - x2 / 3.0), -2.0 * (1.0 + x2 / 3.0));
    }
    let t = x.tanh();
    LogDerivativePair::new(-kappa * t, -kappa / t)
}

/// Resonance position of the well channel at fixed `k / kappa_n`.
///
/// `|t_-|^2 = 1 / (1 + (kappa_n L)^4 sin^2(qL) / (4 (kL)^2 (qL)^2))` with
/// `qL = kappa_n L sqrt(1 + (k/kappa_n)^2)`, so the maxima are exactly the
/// points `qL = j pi` where transmission is complete.
pub fn mesa_resonance_position(k_over_kappa_n: f64, j: u32) -> f64 {
    j as f64 * std::f64::consts::PI / (1.0 + k_over_kappa_n * k_over_kappa_n).sqrt()
}

/// Resonance positions for every `j` in the range, skipping `j = 0`.
pub fn mesa_resonance_positions(
    k_over_kappa_n: f64,
    j_range: RangeInclusive<u32>,
) -> Result<Vec<f64>> {
    if !(k_over_kappa_n > 0.0 && k_over_kappa_n.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "k/kappa_n must be positive, got {k_over_kappa_n}"
        )));
    }
    Ok(j_range
        .filter(|&j| j > 0)
        .map(|j| mesa_resonance_position(k_over_kappa_n, j))
        .collect())
}

/// Full width at half maximum of `|t_-|^2` in `kappa_n L`, the same for every resonance.
///
/// Half maximum is reached where `|sin(qL)| = 2 eps sqrt(1 + eps^2)`, `eps = k/kappa_n`.
/// For small `eps` this is `4 eps`.
pub fn mesa_resonance_width(k_over_kappa_n: f64) -> f64 {
    let e = k_over_kappa_n;
    let s = 2.0 * e * (1.0 + e * e).sqrt();
    if s >= 1.0 {
        return f64::INFINITY;
    }
    2.0 * s.asin() / (1.0 + e * e).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::transfer_matrix_oracle;
    use crate::profile::ModeProfile;
    use crate::scattering::ScatteringParams;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn minus_examples() {
        let p = mesa_logderivs_exact(Channel::Minus, 0.01, 1.0).unwrap();
        assert_relative_eq!(p.even, 0.546362266700540537, max_relative = 1e-13);
        assert_relative_eq!(p.odd, -1.8304704789361885, max_relative = 1e-13);
    }

    #[test]
    fn plus_examples() {
        let p = mesa_logderivs_exact(Channel::Plus, 0.01, 1.0).unwrap();
        assert_relative_eq!(p.even, -0.462074389895558793, max_relative = 1e-13);
        assert_relative_eq!(p.odd, -2.163937283401497801, max_relative = 1e-13);
        let deep = mesa_logderivs_exact(Channel::Plus, 0.01, 60.0).unwrap();
        assert_relative_eq!(deep.even, -60.0, max_relative = 1e-4);
        assert_relative_eq!(deep.odd, -60.0, max_relative = 1e-4);
    }

    #[test]
    fn free_particle() {
        for ch in [Channel::Minus, Channel::Plus] {
            let p = mesa_logderivs_exact(ch, 1.0, 0.0).unwrap();
            assert_relative_eq!(p.even, 0.5f64.tan(), max_relative = 1e-14);
            assert_relative_eq!(p.odd, -1.0 / 0.5f64.tan(), max_relative = 1e-14);
            let a = mesa_amplitudes(ch, 1.0, 0.0).unwrap();
            assert!(a.r.norm() < 1e-14);
            assert!((a.t - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn plus_threshold_is_continuous() {
        for k in [1.0, 3.0, 10.0] {
            let at = mesa_logderivs_exact(Channel::Plus, k, k).unwrap();
            assert_relative_eq!(at.even, 0.0, epsilon = 1e-12);
            assert_relative_eq!(at.odd, -2.0, max_relative = 1e-12);
            for d in [1e-9, 1e-7, 1e-5] {
                for c in [k * (1.0 - d), k * (1.0 + d)] {
                    let p = mesa_logderivs_exact(Channel::Plus, k, c).unwrap();
                    // |kappa'^2| = |c^2 - k^2| is about 2 d k^2 on either side
                    let bound = 2.0 * d * k * k + 1e-12;
                    assert!((p.even - at.even).abs() < bound, "{k} {c}");
                    assert!((p.odd - at.odd).abs() < bound, "{k} {c}");
                }
            }
        }
    }

    #[test]
    fn tangent_pole_is_clamped_and_harmless() {
        // qL = pi makes cos(qL/2) vanish in floating point up to rounding.
        let k = 0.05;
        let c = (PI * PI - k * k).sqrt();
        let p = mesa_logderivs_exact(Channel::Minus, k, c).unwrap();
        assert!(p.even.is_finite() && p.even.abs() > 1e12);
        let a = mesa_amplitudes(Channel::Minus, k, c).unwrap();
        assert!((a.t.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_single_slice_oracle() {
        for &(k, c) in &[
            (0.01, 1.0),
            (0.3, 7.0),
            (2.0, 1.5),
            (5.0, 3.0),
            (1.0, 40.0),
            (0.7, 0.7),
        ] {
            for ch in [Channel::Minus, Channel::Plus] {
                let params =
                    ScatteringParams::from_channel_coupling(k, c, ch, ModeProfile::Mesa).unwrap();
                let o = transfer_matrix_oracle(&params, 1).unwrap();
                let a = mesa_amplitudes(ch, k, c).unwrap();
                assert!(
                    (o.r - a.r).norm() < 1e-12,
                    "{k} {c} {ch}: {} vs {}",
                    o.r,
                    a.r
                );
                assert!(
                    (o.t - a.t).norm() < 1e-12,
                    "{k} {c} {ch}: {} vs {}",
                    o.t,
                    a.t
                );
            }
        }
    }

    #[test]
    fn small_k_error_bound() {
        for eps in [0.001, 0.01, 0.02, 0.05] {
            for i in 1..=200 {
                // Barrier channel over a wide range, well channel below its first pole.
                let wide = 0.1 + (i as f64) * 0.5;
                let narrow = 0.1 + (i as f64) * 0.012;
                for (ch, c) in [(Channel::Plus, wide), (Channel::Minus, narrow)] {
                    let exact = mesa_logderivs_exact(ch, eps * c, c).unwrap();
                    let approx = mesa_logderivs_small_k(ch, c).unwrap();
                    for (x, y) in [(exact.even, approx.even), (exact.odd, approx.odd)] {
                        assert!(
                            (x - y).abs() <= 3.0 * eps * eps * x.abs(),
                            "{ch} eps={eps} c={c}: {x} vs {y}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn resonance_peaks_are_full_transmission_maxima() {
        let eps = 0.01;
        for j in [1, 2, 10, 50, 99, 150] {
            let x0 = mesa_resonance_position(eps, j);
            let t2 = |c: f64| {
                mesa_amplitudes(Channel::Minus, eps * c, c)
                    .unwrap()
                    .transmittance()
            };
            assert!((t2(x0) - 1.0).abs() < 1e-10);
            assert!(t2(x0 - 1e-3) < 1.0 && t2(x0 + 1e-3) < 1.0);
            let w = mesa_resonance_width(eps);
            assert_relative_eq!(t2(x0 - 0.5 * w), 0.5, max_relative = 1e-3);
            assert_relative_eq!(t2(x0 + 0.5 * w), 0.5, max_relative = 1e-3);
        }
    }

    #[test]
    fn resonance_width_is_four_eps() {
        for eps in [1e-4, 1e-3, 0.01] {
            assert_relative_eq!(
                mesa_resonance_width(eps),
                4.0 * eps,
                max_relative = 10.0 * eps * eps + 1e-12
            );
        }
        assert!(mesa_resonance_width(0.6).is_infinite());
    }

    #[test]
    fn first_resonance_near_pi() {
        let p = mesa_resonance_positions(0.01, 0..=3).unwrap();
        assert_eq!(p.len(), 3);
        assert!((p[0] - PI).abs() < 1e-3);
        assert!(mesa_resonance_positions(0.0, 1..=2).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(mesa_logderivs_exact(Channel::Minus, 0.0, 1.0).is_err());
        assert!(mesa_logderivs_exact(Channel::Minus, 1.0, -1.0).is_err());
        assert!(mesa_logderivs_exact(Channel::Minus, f64::NAN, 1.0).is_err());
    }
}
