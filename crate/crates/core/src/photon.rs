//! Photon statistics: initial field weights, ensemble averages, and the
//! micromaser master equation with its stationary solution.
//!
//! Time is measured in arbitrary units shared by the injection rate `r` and
//! the cavity loss rate `gamma = omega / Q`; only their ratio, the pump
//! parameter `N_ex = r / gamma`, enters the stationary distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability mass allowed beyond a truncation.
pub const TAIL_MASS: f64 = 1e-12;

/// Fraction of the largest probability below which a maximum is not counted as a peak.
pub const VISIBLE_PEAK: f64 = 1e-3;

/// Hard ceiling on photon-number truncations.
pub const MAX_PHOTONS: usize = 1_000_000;

/// Initial state of the cavity field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FieldState {
    Number { n: u32 },
    Coherent { mean: f64 },
    Thermal { mean: f64 },
}

impl FieldState {
    fn validate(&self) -> Result<()> {
        match *self {
            FieldState::Number { .. } => Ok(()),
            FieldState::Coherent { mean } | FieldState::Thermal { mean } => {
                if mean >= 0.0 && mean.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "mean photon number must be nonnegative, got {mean}"
                    )))
                }
            }
        }
    }
}

/// `|c_n|^2` for `n = 0..=N_max`, with `N_max` the smallest truncation whose
/// omitted tail is below [`TAIL_MASS`], renormalized to sum to one.
pub fn field_weights(state: &FieldState) -> Result<Vec<f64>> {
    state.validate()?;
    let mut w = match *state {
        FieldState::Number { n } => {
            let mut w = vec![0.0; n as usize + 1];
            w[n as usize] = 1.0;
            return Ok(w);
        }
        FieldState::Coherent { mean } => poisson_weights(mean)?,
        FieldState::Thermal { mean } => thermal_weights(mean)?,
    };
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    Ok(w)
}

fn poisson_weights(mean: f64) -> Result<Vec<f64>> {
    if mean == 0.0 {
        return Ok(vec![1.0]);
    }
    let ln_mean = mean.ln();
    let mut log_w = -mean;
    let mut w = vec![log_w.exp()];
    let mut n = 0usize;
    loop {
        n += 1;
        log_w += ln_mean - (n as f64).ln();
        w.push(log_w.exp());
        // past the mode the ratio of successive weights is below one and falling
        let ratio = mean / (n + 1) as f64;
        if ratio < 1.0 && log_w.exp() * ratio / (1.0 - ratio) < TAIL_MASS {
            return Ok(w);
        }
        if n >= MAX_PHOTONS {
            return Err(Error::NonNormalizable { n_max: MAX_PHOTONS });
        }
    }
}

fn thermal_weights(mean: f64) -> Result<Vec<f64>> {
    if mean == 0.0 {
        return Ok(vec![1.0]);
    }
    let q = mean / (mean + 1.0);
    // tail beyond N is q^(N+1)
    let n_max = (TAIL_MASS.ln() / q.ln()).ceil() as usize;
    if n_max > MAX_PHOTONS {
        return Err(Error::NonNormalizable { n_max: MAX_PHOTONS });
    }
    let mut w = Vec::with_capacity(n_max + 1);
    let mut x = 1.0 / (mean + 1.0);
    for _ in 0..=n_max {
        w.push(x);
        x *= q;
    }
    Ok(w)
}

/// `sum_n weights[n] * per_n[n]`.
pub fn ensemble_average(weights: &[f64], per_n: &[f64]) -> Result<f64> {
    if weights.len() != per_n.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            found: per_n.len(),
        });
    }
    Ok(weights.iter().zip(per_n).map(|(w, x)| w * x).sum())
}

/// Emission probability `sin^2(theta_n)` of a conventional (fast-atom) micromaser.
pub fn conventional_emission(rabi_angle: f64) -> f64 {
    rabi_angle.sin().powi(2)
}

/// `theta_n = (kappa_n L)^2 / (2 kL)`: half the Rabi frequency times the transit time `mL/(hbar k)`.
pub fn conventional_rabi_angle(k_l: f64, kappa_n_l: f64) -> f64 {
    kappa_n_l * kappa_n_l / (2.0 * k_l)
}

/// Photon-number distribution `p_0, p_1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    pub p: Vec<f64>,
}

impl PhotonDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("empty photon distribution".into()));
        }
        if let Some((n, &v)) = p.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeProbability { n, value: v });
        }
        Ok(PhotonDistribution { p })
    }

    pub fn thermal(mean: f64, n_max: usize) -> Result<Self> {
        let state = FieldState::Thermal { mean };
        state.validate()?;
        let q = mean / (mean + 1.0);
        let mut p: Vec<f64> = (0..=n_max)
            .map(|n| q.powi(n as i32) / (mean + 1.0))
            .collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        Ok(PhotonDistribution { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Photon numbers where `p_n` exceeds both neighbours (only the right one at `n = 0`).
    pub fn local_maxima(&self) -> Vec<usize> {
        let p = &self.p;
        (0..p.len())
            .filter(|&n| {
                let left = n == 0 || p[n] > p[n - 1];
                let right = n + 1 == p.len() || p[n] > p[n + 1];
                left && right
            })
            .collect()
    }

    /// Interior maxima (both neighbours strictly lower) holding at least
    /// `min_relative` of the largest probability.
    pub fn peaks(&self, min_relative: f64) -> Vec<usize> {
        let p = &self.p;
        let floor = min_relative * p.iter().cloned().fold(0.0, f64::max);
        (1..p.len().saturating_sub(1))
            .filter(|&n| p[n] > p[n - 1] && p[n] > p[n + 1] && p[n] >= floor)
            .collect()
    }

    /// Sum of absolute differences, padding the shorter distribution with zeros.
    pub fn l1_distance(&self, other: &PhotonDistribution) -> f64 {
        let n = self.p.len().max(other.p.len());
        (0..n)
            .map(|i| {
                (self.p.get(i).copied().unwrap_or(0.0) - other.p.get(i).copied().unwrap_or(0.0))
                    .abs()
            })
            .sum()
    }

    /// `sum p ln(p / q)` over the common support; infinite if `q` vanishes where `p` does not.
    pub fn kl_divergence(&self, other: &PhotonDistribution) -> f64 {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(n, &p)| {
                let q = other.p.get(n).copied().unwrap_or(0.0);
                if q > 0.0 {
                    p * (p / q).ln()
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    }
}

/// Injection and cavity-loss rates for time evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Atoms injected per unit time, `r`.
    pub injection: f64,
    /// Field decay rate `omega / Q`.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicromaserConfig {
    /// Atoms per cavity lifetime, `r Q / omega`.
    pub n_ex: f64,
    /// Mean thermal photon number of the reservoir.
    pub n_b: f64,
    /// Emission probability `P_em^n` for `n = 0, 1, ...`; the last entry sets the truncation.
    pub gain: Vec<f64>,
    pub rates: Option<Rates>,
}

impl MicromaserConfig {
    pub fn new(n_ex: f64, n_b: f64, gain: Vec<f64>) -> Result<Self> {
        let c = MicromaserConfig {
            n_ex,
            n_b,
            gain,
            rates: None,
        };
        c.validate()?;
        Ok(c)
    }

    /// Configuration for time evolution; `N_ex` follows from the two rates.
    pub fn with_rates(injection: f64, loss: f64, n_b: f64, gain: Vec<f64>) -> Result<Self> {
        if !(injection >= 0.0 && loss > 0.0 && injection.is_finite() && loss.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need injection >= 0 and loss > 0, got {injection}, {loss}"
            )));
        }
        let c = MicromaserConfig {
            n_ex: injection / loss,
            n_b,
            gain,
            rates: Some(Rates { injection, loss }),
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.n_ex >= 0.0 && self.n_ex.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "N_ex must be nonnegative, got {}",
                self.n_ex
            )));
        }
        if !(self.n_b >= 0.0 && self.n_b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "n_b must be nonnegative, got {}",
                self.n_b
            )));
        }
        if self.gain.is_empty() {
            return Err(Error::InvalidParameter("gain curve is empty".into()));
        }
        if let Some((n, g)) = self
            .gain
            .iter()
            .enumerate()
            .find(|(_, g)| !(**g >= 0.0 && **g <= 1.0))
        {
            return Err(Error::InvalidParameter(format!(
                "gain[{n}] = {g} is outside [0, 1]"
            )));
        }
        if let Some(r) = self.rates {
            let ratio = r.injection / r.loss;
            if (ratio - self.n_ex).abs() > 1e-12 * ratio.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "N_ex = {} disagrees with injection/loss = {ratio}",
                    self.n_ex
                )));
            }
        }
        Ok(())
    }

    /// Highest photon number represented: one above the last gain entry.
    pub fn n_max(&self) -> usize {
        self.gain.len()
    }

    fn rates(&self) -> Result<Rates> {
        self.rates.ok_or_else(|| {
            Error::InvalidParameter("time evolution needs injection and loss rates".into())
        })
    }
}

/// `ln(p_n / p_0)` from the detailed-balance ratios
/// `p_n / p_{n-1} = (n_b + N_ex G_{n-1} / n) / (n_b + 1)`.
fn log_ratios(n_ex: f64, n_b: f64, gain: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(gain.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    let denom = (n_b + 1.0).ln();
    for (j, g) in gain.iter().enumerate() {
        let up = n_b + n_ex * g / (j + 1) as f64;
        acc += up.ln() - denom;
        out.push(acc);
    }
    out
}

fn normalise_logs(logs: &[f64]) -> Vec<f64> {
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Bound on the mass beyond `p_N` if no later gain exceeds `gain_bound`.
fn tail_bound(n_ex: f64, n_b: f64, gain_bound: f64, last: f64, n: usize) -> f64 {
    let rho = (n_b + n_ex * gain_bound / (n + 1) as f64) / (n_b + 1.0);
    if rho >= 1.0 {
        f64::INFINITY
    } else {
        last * rho / (1.0 - rho)
    }
}

/// Stationary distribution of the master equation truncated at `config.n_max()`.
///
/// Omitted gains are taken to be no larger than the largest supplied one;
/// fails when the truncation then cannot guarantee an omitted tail below
/// [`TAIL_MASS`].
pub fn steady_state_distribution(config: &MicromaserConfig) -> Result<PhotonDistribution> {
    config.validate()?;
    let gain_max = config.gain.iter().cloned().fold(0.0, f64::max);
    truncated_steady_state(config, gain_max)
}

fn truncated_steady_state(
    config: &MicromaserConfig,
    gain_bound: f64,
) -> Result<PhotonDistribution> {
    let p = normalise_logs(&log_ratios(config.n_ex, config.n_b, &config.gain));
    let n = p.len() - 1;
    if tail_bound(config.n_ex, config.n_b, gain_bound, p[n], n) >= TAIL_MASS {
        return Err(Error::NonNormalizable { n_max: n });
    }
    Ok(PhotonDistribution { p })
}

/// Stationary distribution with the gain curve produced on demand, grown
/// until the tail is below [`TAIL_MASS`] for any later gain in `[0, 1]`,
/// or [`MAX_PHOTONS`] is reached.
///
/// `gain_block(range)` must return `P_em^n` for every `n` in the range.
pub fn steady_state_adaptive<F>(
    n_ex: f64,
    n_b: f64,
    mut gain_block: F,
) -> Result<(PhotonDistribution, Vec<f64>)>
where
    F: FnMut(std::ops::Range<usize>) -> Result<Vec<f64>>,
{
    let mut gain: Vec<f64> = Vec::new();
    let mut target = 64usize.max((1.5 * n_ex) as usize + 16).min(MAX_PHOTONS);
    loop {
        let block = gain_block(gain.len()..target)?;
        if block.len() != target - gain.len() {
            return Err(Error::LengthMismatch {
                expected: target - gain.len(),
                found: block.len(),
            });
        }
        gain.extend(block);
        let config = MicromaserConfig::new(n_ex, n_b, gain.clone())?;
        match truncated_steady_state(&config, 1.0) {
            Ok(p) => return Ok((p, gain)),
            Err(Error::NonNormalizable { .. }) if target < MAX_PHOTONS => {
                target = (2 * target).min(MAX_PHOTONS)
            }
            Err(e) => return Err(e),
        }
    }
}

/// Right-hand side of the master equation with a reflecting top boundary:
/// `dp_n/dt = r (p_{n-1} G_{n-1} - p_n G_n)
///          - gamma (n_b + 1) (n p_n - (n+1) p_{n+1})
///          - gamma n_b ((n+1) p_n - n p_{n-1})`,
/// where no gain or thermal excitation leaves the highest level.
pub fn master_equation_rhs(p: &[f64], config: &MicromaserConfig) -> Result<Vec<f64>> {
    let rates = config.rates()?;
    if p.len() != config.n_max() + 1 {
        return Err(Error::LengthMismatch {
            expected: config.n_max() + 1,
            found: p.len(),
        });
    }
    let mut out = vec![0.0; p.len()];
    rhs_into(p, config, rates, &mut out);
    Ok(out)
}

fn rhs_into(p: &[f64], config: &MicromaserConfig, rates: Rates, out: &mut [f64]) {
    let top = p.len() - 1;
    let (r, g, nb) = (rates.injection, rates.loss, config.n_b);
    // upward flux n -> n+1 and downward flux n+1 -> n, for n = 0..top-1
    out.fill(0.0);
    for n in 0..top {
        let up = (r * config.gain[n] + g * nb * (n + 1) as f64) * p[n];
        let down = g * (nb + 1.0) * (n + 1) as f64 * p[n + 1];
        let flow = up - down;
        out[n] -= flow;
        out[n + 1] += flow;
    }
}

fn max_rate(config: &MicromaserConfig, rates: Rates) -> f64 {
    let top = config.n_max();
    (0..=top)
        .map(|n| {
            let up = if n < top {
                rates.injection * config.gain[n] + rates.loss * config.n_b * (n + 1) as f64
            } else {
                0.0
            };
            up + rates.loss * (config.n_b + 1.0) * n as f64
        })
        .fold(0.0, f64::max)
}

/// Integrates the master equation from `p0` for a time `t_end` with RK4 at
/// a step no larger than `0.1 / max_rate`.
pub fn evolve_master_equation(
    p0: &PhotonDistribution,
    config: &MicromaserConfig,
    t_end: f64,
) -> Result<PhotonDistribution> {
    config.validate()?;
    let rates = config.rates()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "end time must be nonnegative, got {t_end}"
        )));
    }
    let len = config.n_max() + 1;
    if p0.p.len() > len {
        return Err(Error::LengthMismatch {
            expected: len,
            found: p0.p.len(),
        });
    }
    let mut p = p0.p.clone();
    p.resize(len, 0.0);
    let rate = max_rate(config, rates);
    if t_end == 0.0 || rate == 0.0 {
        return Ok(PhotonDistribution { p });
    }
    let steps = (t_end * rate / 0.1).ceil().max(1.0) as u64;
    let dt = t_end / steps as f64;
    let mut k1 = vec![0.0; len];
    let mut k2 = vec![0.0; len];
    let mut k3 = vec![0.0; len];
    let mut k4 = vec![0.0; len];
    let mut tmp = vec![0.0; len];
    for _ in 0..steps {
        rhs_into(&p, config, rates, &mut k1);
        for i in 0..len {
            tmp[i] = p[i] + 0.5 * dt * k1[i];
        }
        rhs_into(&tmp, config, rates, &mut k2);
        for i in 0..len {
            tmp[i] = p[i] + 0.5 * dt * k2[i];
        }
        rhs_into(&tmp, config, rates, &mut k3);
        for i in 0..len {
            tmp[i] = p[i] + dt * k3[i];
        }
        rhs_into(&tmp, config, rates, &mut k4);
        for i in 0..len {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some((n, &v)) = p.iter().enumerate().find(|(_, v)| **v < -1e-12) {
            return Err(Error::NegativeProbability { n, value: v });
        }
    }
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    Ok(PhotonDistribution { p })
}
