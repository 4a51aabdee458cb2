//! Dressed-channel scattering quantities shared by every engine.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::ModeProfile;

/// Dressed channel `|±, n>`: the cavity is a barrier for `Plus` and a well for `Minus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Plus,
    Minus,
}

impl Channel {
    /// Sign in front of `kappa_n^2 u(z)` in the channel potential.
    pub fn sign(self) -> f64 {
        match self {
            Channel::Plus => 1.0,
            Channel::Minus => -1.0,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Plus => "plus",
            Channel::Minus => "minus",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" | "barrier" => Ok(Channel::Plus),
            "minus" | "-" | "well" => Ok(Channel::Minus),
            other => Err(Error::InvalidParameter(format!(
                "unknown channel `{other}`"
            ))),
        }
    }
}

/// `kappa_n L = kappa L (n + 1)^(1/4)`.
pub fn rabi_wavenumber(kappa_l: f64, n: u32) -> f64 {
    kappa_l * (f64::from(n) + 1.0).powf(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringParams {
    /// Incident wavenumber times `L`.
    pub k_l: f64,
    /// Vacuum coupling wavenumber times `L`.
    pub kappa_l: f64,
    pub photons: u32,
    pub channel: Channel,
    pub profile: ModeProfile,
}

impl ScatteringParams {
    /// A zero coupling is accepted and describes a free particle.
    pub fn new(
        k_l: f64,
        kappa_l: f64,
        photons: u32,
        channel: Channel,
        profile: ModeProfile,
    ) -> Result<Self> {
        if !(k_l > 0.0) || !k_l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kL must be positive and finite, got {k_l}"
            )));
        }
        if !(kappa_l >= 0.0) || !kappa_l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa L must be nonnegative and finite, got {kappa_l}"
            )));
        }
        Ok(ScatteringParams {
            k_l,
            kappa_l,
            photons,
            channel,
            profile,
        })
    }

    /// Parameters addressed directly by the channel coupling `kappa_n L` (photon number 0).
    pub fn from_channel_coupling(
        k_l: f64,
        kappa_n_l: f64,
        channel: Channel,
        profile: ModeProfile,
    ) -> Result<Self> {
        Self::new(k_l, kappa_n_l, 0, channel, profile)
    }

    pub fn kappa_n_l(&self) -> f64 {
        rabi_wavenumber(self.kappa_l, self.photons)
    }

    /// Squared local wavenumber `(kL)^2 ∓ (kappa_n L)^2 u`, the coefficient in `phi'' + P phi = 0`.
    pub fn local_coefficient(&self, u: f64) -> f64 {
        let kn = self.kappa_n_l();
        self.k_l * self.k_l - self.channel.sign() * kn * kn * u
    }

    /// Largest `|P|^(1/2)` over the cavity: sets the integration step.
    pub fn max_local_wavenumber(&self) -> f64 {
        let kn = self.kappa_n_l();
        let peak = kn * kn * self.profile.peak();
        let k2 = self.k_l * self.k_l;
        match self.channel {
            Channel::Minus => (k2 + peak).sqrt(),
            Channel::Plus => k2.max((peak - k2).abs()).sqrt(),
        }
    }
}

/// Logarithmic derivatives `beta L` of the even and odd real eigensolutions at `z = -L/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDerivativePair {
    pub even: f64,
    pub odd: f64,
}

/// Magnitude cap for `beta L`; a solution node exactly at the edge maps here.
pub const BETA_CLAMP: f64 = 1e15;

impl LogDerivativePair {
    pub fn new(even: f64, odd: f64) -> Self {
        LogDerivativePair {
            even: clamp_beta(even),
            odd: clamp_beta(odd),
        }
    }

    /// `beta = slope / value`, clamped when the value vanishes.
    pub fn from_edge_values(even: (f64, f64), odd: (f64, f64)) -> Self {
        LogDerivativePair {
            even: ratio(even.1, even.0),
            odd: ratio(odd.1, odd.0),
        }
    }
}

fn clamp_beta(b: f64) -> f64 {
    if b.is_nan() {
        b
    } else {
        b.clamp(-BETA_CLAMP, BETA_CLAMP)
    }
}

fn ratio(slope: f64, value: f64) -> f64 {
    if value.abs() * BETA_CLAMP <= slope.abs() {
        let s = if (slope >= 0.0) == (value >= 0.0) {
            1.0
        } else {
            -1.0
        };
        s * BETA_CLAMP
    } else {
        slope / value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelAmplitudes {
    pub r: Complex64,
    pub t: Complex64,
}

impl ChannelAmplitudes {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }

    /// `max(| |r|^2 + |t|^2 - 1 |, | |r+t| - 1 |, | |r-t| - 1 |)`.
    pub fn unitarity_defect(&self) -> f64 {
        let a = (self.r.norm_sqr() + self.t.norm_sqr() - 1.0).abs();
        let b = ((self.r + self.t).norm() - 1.0).abs();
        let c = ((self.r - self.t).norm() - 1.0).abs();
        a.max(b).max(c)
    }
}

/// Reflection and transmission amplitudes from the edge log-derivatives.
///
/// Evaluated through the even/odd phase factors
/// `e^{2i delta} = e^{-ikL} (k + i beta) / (k - i beta)`, with
/// `r = (e_even + e_odd) / 2` and `t = (e_even - e_odd) / 2`. This is the same
/// rational expression as `r = (k^2 + b_e b_o) / ((k - i b_e)(k - i b_o)) e^{-ikL}`,
/// `t = i k (b_e - b_o) / (...) e^{-ikL}`, but stays unitary to rounding when
/// either `beta` is huge.
pub fn amplitudes_from_logderivs(pair: LogDerivativePair, k_l: f64) -> ChannelAmplitudes {
    let k = Complex64::new(k_l, 0.0);
    let phase = |beta: f64| {
        let b = Complex64::new(0.0, beta);
        (k + b) / (k - b)
    };
    let e_even = phase(pair.even);
    let e_odd = phase(pair.odd);
    let carrier = Complex64::from_polar(1.0, -k_l);
    ChannelAmplitudes {
        r: carrier * (e_even + e_odd) * 0.5,
        t: carrier * (e_even - e_odd) * 0.5,
    }
}

/// Probabilities of the four detection outcomes for an atom entering in `|e>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities {
    /// Transmitted, upper state.
    pub te: f64,
    /// Transmitted, lower state.
    pub tf: f64,
    /// Reflected, upper state.
    pub re: f64,
    /// Reflected, lower state.
    pub rf: f64,
}

/// Values below this are reported as exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

fn flush(p: f64) -> f64 {
    if p < PROBABILITY_FLOOR {
        0.0
    } else {
        p
    }
}

impl OutcomeProbabilities {
    /// Probability that a photon is left in the cavity, `Tf + Rf`.
    pub fn emission(&self) -> f64 {
        self.tf + self.rf
    }

    /// Probability that the atom is transmitted, `Te + Tf`.
    pub fn transmission(&self) -> f64 {
        self.te + self.tf
    }

    pub fn total(&self) -> f64 {
        self.te + self.tf + self.re + self.rf
    }

    pub fn quantity(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Te => self.te,
            Quantity::Tf => self.tf,
            Quantity::Re => self.re,
            Quantity::Rf => self.rf,
            Quantity::Pem => self.emission(),
            Quantity::T => self.transmission(),
        }
    }
}

/// Scalar observables that can be tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    Te,
    Tf,
    Re,
    Rf,
    Pem,
    T,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::Te => "Te",
            Quantity::Tf => "Tf",
            Quantity::Re => "Re",
            Quantity::Rf => "Rf",
            Quantity::Pem => "Pem",
            Quantity::T => "T",
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Te" | "te" => Ok(Quantity::Te),
            "Tf" | "tf" => Ok(Quantity::Tf),
            "Re" | "re" => Ok(Quantity::Re),
            "Rf" | "rf" => Ok(Quantity::Rf),
            "Pem" | "pem" => Ok(Quantity::Pem),
            "T" | "t" => Ok(Quantity::T),
            other => Err(Error::InvalidParameter(format!(
                "unknown quantity `{other}`"
            ))),
        }
    }
}

/// Combines the two dressed channels of one photon number.
pub fn outcome_probabilities(
    plus: &ChannelAmplitudes,
    minus: &ChannelAmplitudes,
) -> OutcomeProbabilities {
    OutcomeProbabilities {
        te: flush(0.25 * (plus.t + minus.t).norm_sqr()),
        tf: flush(0.25 * (plus.t - minus.t).norm_sqr()),
        re: flush(0.25 * (plus.r + minus.r).norm_sqr()),
        rf: flush(0.25 * (plus.r - minus.r).norm_sqr()),
    }
}
