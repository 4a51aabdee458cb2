//! Longitudinal cavity mode shapes.
//!
//! Positions are measured in units of the cavity length, so the mode lives on
//! `-1/2 <= z/L <= 1/2` and integrates to one in these units.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeProfile {
    /// Constant field of height one across the cavity.
    Mesa,
    /// Single-antinode cosine, `(pi/2) cos(pi z / L)`.
    Sinusoidal,
}

/// Result of locating the classical turning point of the barrier channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TurningPoint {
    /// Turning points at `z = ±a`, stored as `a / L`.
    At(f64),
    /// The incident energy exceeds the barrier top.
    Absent,
}

impl TurningPoint {
    pub fn a_over_l(self) -> Option<f64> {
        match self {
            TurningPoint::At(a) => Some(a),
            TurningPoint::Absent => None,
        }
    }
}

impl ModeProfile {
    pub const ALL: [ModeProfile; 2] = [ModeProfile::Mesa, ModeProfile::Sinusoidal];

    /// `u(z)` at `z/L`. The mesa edge `|z/L| = 1/2` counts as inside.
    pub fn evaluate(self, z_over_l: f64) -> f64 {
        let r = z_over_l.abs();
        match self {
            ModeProfile::Mesa => {
                if r <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            ModeProfile::Sinusoidal => {
                if r < 0.5 {
                    FRAC_PI_2 * (PI * r).cos()
                } else {
                    0.0
                }
            }
        }
    }

    /// Maximum of `u`, reached at the cavity centre.
    pub fn peak(self) -> f64 {
        match self {
            ModeProfile::Mesa => 1.0,
            ModeProfile::Sinusoidal => FRAC_PI_2,
        }
    }

    /// Where `k^2 = kappa_n^2 u(a)` for the barrier channel.
    pub fn turning_point(self, k_over_kappa_n: f64) -> Result<TurningPoint> {
        if !(k_over_kappa_n >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "k/kappa_n must be nonnegative, got {k_over_kappa_n}"
            )));
        }
        let height = k_over_kappa_n * k_over_kappa_n;
        Ok(match self {
            ModeProfile::Mesa => {
                if height < 1.0 {
                    TurningPoint::At(0.5)
                } else {
                    TurningPoint::Absent
                }
            }
            ModeProfile::Sinusoidal => {
                let c = height / FRAC_PI_2;
                if c <= 1.0 {
                    TurningPoint::At(c.acos() / PI)
                } else {
                    TurningPoint::Absent
                }
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeProfile::Mesa => "mesa",
            ModeProfile::Sinusoidal => "sinusoidal",
        }
    }
}

impl fmt::Display for ModeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mesa" | "constant" => Ok(ModeProfile::Mesa),
            "sinusoidal" | "sin" | "cosine" => Ok(ModeProfile::Sinusoidal),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode profile `{other}`"
            ))),
        }
    }
}

/// Samples `u` on the uniform grid `z_j = -j * h`, `j = 0, 1, 2, ...`.
///
/// The cosine is advanced by complex rotation and resynchronised with a direct
/// evaluation every `RESYNC` samples, which keeps the drift near rounding level.
pub(crate) struct UniformSampler {
    profile: ModeProfile,
    rot_re: f64,
    rot_im: f64,
    re: f64,
    im: f64,
    h: f64,
    index: usize,
}

const RESYNC: usize = 64;

impl UniformSampler {
    pub(crate) fn new(profile: ModeProfile, h: f64) -> Self {
        let angle = -PI * h;
        UniformSampler {
            profile,
            rot_re: angle.cos(),
            rot_im: angle.sin(),
            re: 1.0,
            im: 0.0,
            h,
            index: 0,
        }
    }

    /// Returns `u(z_j)` and advances to `z_{j+1}`.
    #[inline]
    pub(crate) fn next_value(&mut self) -> f64 {
        let z = -(self.index as f64) * self.h;
        let value = match self.profile {
            ModeProfile::Mesa => {
                if z >= -0.5 - 1e-12 {
                    1.0
                } else {
                    0.0
                }
            }
            ModeProfile::Sinusoidal => {
                if z <= -0.5 {
                    0.0
                } else {
                    FRAC_PI_2 * self.re
                }
            }
        };
        self.index += 1;
        if self.index.is_multiple_of(RESYNC) {
            let a = -PI * (self.index as f64) * self.h;
            self.re = a.cos();
            self.im = a.sin();
        } else {
            let re = self.re * self.rot_re - self.im * self.rot_im;
            self.im = self.re * self.rot_im + self.im * self.rot_re;
            self.re = re;
        }
        value
    }
}
