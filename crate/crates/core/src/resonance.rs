//! Transmission resonances of the well channel as a function of `kappa_n L`
//! at fixed `k / kappa_n`.
//!
//! Peaks are located on a grid fine enough to resolve the expected width,
//! refined by golden-section search and characterised by their full width
//! at half maximum. The positions predicted by the semiclassical condition
//! `phi = m pi/2 + pi/12` (sinusoidal) or `qL = j pi` (mesa) are used to
//! check that nothing was missed.

use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{evaluate_point, solve_channel, Engine, EngineOptions};
use crate::error::{Error, Result};
use crate::mesa::{mesa_resonance_position, mesa_resonance_width};
use crate::profile::ModeProfile;
use crate::scattering::{Channel, LogDerivativePair, ScatteringParams};
use crate::semiclassical::{resonance_integral, wkb_phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// The parity whose log-derivative is the smaller one in magnitude.
    ///
    /// On a full-transmission peak `beta_e beta_o = -k^2`, so exactly one of
    /// them lies below `k` in magnitude; that is the solution with a
    /// (near-)vanishing edge slope.
    pub fn from_logderivs(pair: LogDerivativePair) -> Parity {
        if pair.even.abs() <= pair.odd.abs() {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The curve whose maxima are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `|t_-|^2`, the well-channel transmission.
    WellTransmission,
    /// `P_em = T_f + R_f`.
    Emission,
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t2" | "well" | "well_transmission" | "transmission" => {
                Ok(Observable::WellTransmission)
            }
            "pem" | "emission" => Ok(Observable::Emission),
            other => Err(Error::InvalidParameter(format!(
                "unknown observable `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceInfo {
    /// `j` with `qL ≈ j pi` (mesa) or `m` with `phi ≈ m pi/2 + pi/12` (sinusoidal), counted from 0.
    pub index: i64,
    pub position: f64,
    pub fwhm: f64,
    pub parity: Parity,
    /// Observable value at the peak.
    pub peak: f64,
    /// Peak value below one half.
    pub shallow: bool,
    /// A neighbouring valley stays above half maximum, so the width is measured to that valley.
    pub overlapping: bool,
}

const MAX_RESCANS: usize = 4;

/// Peak values below this are flagged as shallow.
pub const SHALLOW_PEAK: f64 = 0.5;

/// Roots of `phi(kappa_n L) = m pi/2 + pi/12` for the sinusoidal mode.
///
/// The phase is linear in `kappa_n L` at fixed ratio, so each root is
/// `(m pi/2 + pi/12) pi / I(k/kappa_n)`.
pub fn resonance_condition_roots(
    k_over_kappa_n: f64,
    m_range: RangeInclusive<u32>,
) -> Result<Vec<f64>> {
    let i = resonance_integral(k_over_kappa_n)?;
    Ok(m_range
        .map(|m| (m as f64 * PI / 2.0 + PI / 12.0) * PI / i)
        .collect())
}

/// Predicted resonance positions inside `window`, with their indices.
pub fn predicted_positions(
    profile: ModeProfile,
    k_over_kappa_n: f64,
    window: (f64, f64),
) -> Result<Vec<(i64, f64)>> {
    check_ratio(k_over_kappa_n)?;
    let (a, b) = window;
    match profile {
        ModeProfile::Mesa => {
            let unit = mesa_resonance_position(k_over_kappa_n, 1);
            let lo = (a / unit).ceil().max(1.0) as u32;
            let hi = (b / unit).floor().max(0.0) as u32;
            Ok((lo..=hi)
                .map(|j| (j as i64, mesa_resonance_position(k_over_kappa_n, j)))
                .filter(|p| p.1 >= a && p.1 <= b)
                .collect())
        }
        ModeProfile::Sinusoidal => {
            let slope = resonance_integral(k_over_kappa_n)? / PI;
            let m_of = |x: f64| (x * slope - PI / 12.0) / (PI / 2.0);
            let lo = m_of(a).ceil().max(0.0) as u32;
            let hi = m_of(b).floor();
            if hi < 0.0 {
                return Ok(Vec::new());
            }
            let roots = resonance_condition_roots(k_over_kappa_n, lo..=hi as u32)?;
            Ok((lo..=hi as u32)
                .zip(roots)
                .map(|(m, x)| (m as i64, x))
                .filter(|p| p.1 >= a && p.1 <= b)
                .collect())
        }
    }
}

/// Index of the resonance nearest `kappa_n L`.
pub fn resonance_index(profile: ModeProfile, k_over_kappa_n: f64, kappa_n_l: f64) -> Result<i64> {
    match profile {
        ModeProfile::Mesa => {
            Ok((kappa_n_l / mesa_resonance_position(k_over_kappa_n, 1)).round() as i64)
        }
        ModeProfile::Sinusoidal => {
            let phi = wkb_phase(profile, k_over_kappa_n * kappa_n_l, kappa_n_l)?;
            Ok(((phi - PI / 12.0) / (PI / 2.0)).round() as i64)
        }
    }
}

/// Width guess used to size the scan grid: the mesa width, four times wider for the sinusoidal mode.
pub fn expected_width(profile: ModeProfile, k_over_kappa_n: f64) -> f64 {
    let w = mesa_resonance_width(k_over_kappa_n).min(4.0 * k_over_kappa_n);
    match profile {
        ModeProfile::Mesa => w,
        ModeProfile::Sinusoidal => 4.0 * w,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub observable: Observable,
    /// Grid points per expected width.
    pub points_per_width: f64,
    /// Overrides the width guess that sets the grid spacing.
    pub expected_width: Option<f64>,
    /// Relative tolerance on refined positions.
    pub position_tolerance: f64,
    /// Local maxima rising less than this fraction of their height above both neighbouring valleys are ignored.
    pub min_prominence: f64,
    /// Fail when a predicted resonance has no detected peak nearby.
    pub check_predictions: bool,
    pub engine: EngineOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            observable: Observable::WellTransmission,
            points_per_width: 25.0,
            expected_width: None,
            position_tolerance: 1e-6,
            min_prominence: 1e-3,
            check_predictions: true,
            engine: EngineOptions::default(),
        }
    }
}

fn check_ratio(k_over_kappa_n: f64) -> Result<()> {
    if !(k_over_kappa_n > 0.0 && k_over_kappa_n.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "k/kappa_n must be positive, got {k_over_kappa_n}"
        )));
    }
    Ok(())
}

struct Curve<'a> {
    profile: ModeProfile,
    ratio: f64,
    engine: Engine,
    options: &'a SearchOptions,
}

impl Curve<'_> {
    fn params(&self, c: f64) -> Result<ScatteringParams> {
        ScatteringParams::from_channel_coupling(self.ratio * c, c, Channel::Minus, self.profile)
    }

    fn value(&self, c: f64) -> Result<f64> {
        match self.options.observable {
            Observable::WellTransmission => {
                let s = solve_channel(self.engine, &self.params(c)?, &self.options.engine)?;
                Ok(s.amplitudes.transmittance())
            }
            Observable::Emission => {
                let p = evaluate_point(
                    self.engine,
                    self.profile,
                    self.ratio * c,
                    c,
                    &self.options.engine,
                )?;
                Ok(p.probabilities.emission())
            }
        }
    }

    fn parity(&self, c: f64) -> Result<Parity> {
        let s = solve_channel(self.engine, &self.params(c)?, &self.options.engine)?;
        Ok(Parity::from_logderivs(s.pair))
    }
}

/// Locates the resonances of `profile` with `kappa_n L` inside `window`.
pub fn find_resonances(
    profile: ModeProfile,
    k_over_kappa_n: f64,
    window: (f64, f64),
    engine: Engine,
    options: &SearchOptions,
) -> Result<Vec<ResonanceInfo>> {
    check_ratio(k_over_kappa_n)?;
    let (a, b) = window;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "window must satisfy 0 < a < b, got ({a}, {b})"
        )));
    }
    if !(options.points_per_width >= 2.0) {
        return Err(Error::InvalidParameter(
            "need at least two grid points per width".into(),
        ));
    }
    let curve = Curve {
        profile,
        ratio: k_over_kappa_n,
        engine,
        options,
    };
    let mut width = options
        .expected_width
        .unwrap_or_else(|| expected_width(profile, k_over_kappa_n));
    let mut found = scan(&curve, window, width)?;
    // Narrower peaks than assumed: rescan with the observed width until it settles.
    for _ in 0..MAX_RESCANS {
        match found
            .iter()
            .filter(|r| !r.overlapping)
            .map(|r| r.fwhm)
            .reduce(f64::min)
        {
            Some(w) if w < 0.9 * width => {
                width = w;
                found = scan(&curve, window, width)?;
            }
            _ => break,
        }
    }
    if options.check_predictions && options.observable == Observable::WellTransmission {
        let predicted = predicted_positions(profile, k_over_kappa_n, window)?;
        let spacing = PI / (resonance_integral(k_over_kappa_n)? / PI) / 2.0;
        let margin = 0.1 * spacing.min(PI);
        for (_, x) in predicted {
            if x < a + margin || x > b - margin {
                continue;
            }
            if !found
                .iter()
                .any(|r| (r.position - x).abs() < 0.25 * spacing.min(PI))
            {
                return Err(Error::WindowTooCoarse { position: x });
            }
        }
    }
    Ok(found)
}

fn scan(curve: &Curve<'_>, window: (f64, f64), width: f64) -> Result<Vec<ResonanceInfo>> {
    let (a, b) = window;
    let h = width / curve.options.points_per_width;
    let n = ((b - a) / h).ceil() as usize + 1;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { b } else { a + i as f64 * h })
        .collect();
    let ys: Vec<f64> = xs
        .par_iter()
        .map(|&x| curve.value(x))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(ys[i] > ys[i - 1] && ys[i] >= ys[i + 1]) {
            continue;
        }
        let (left_valley, right_valley) = valleys(&ys, i);
        let prominence = ys[i] - ys[left_valley].max(ys[right_valley]);
        if prominence <= curve.options.min_prominence * ys[i] {
            continue;
        }
        out.push(characterise(curve, &xs, &ys, i, left_valley, right_valley)?);
    }
    Ok(out)
}

/// Indices of the lowest points between peak `i` and the next higher sample on each side.
fn valleys(ys: &[f64], i: usize) -> (usize, usize) {
    let mut l = i;
    let mut lmin = i;
    while l > 0 && ys[l - 1] <= ys[i] {
        l -= 1;
        if ys[l] < ys[lmin] {
            lmin = l;
        }
    }
    let mut r = i;
    let mut rmin = i;
    while r + 1 < ys.len() && ys[r + 1] <= ys[i] {
        r += 1;
        if ys[r] < ys[rmin] {
            rmin = r;
        }
    }
    (lmin, rmin)
}

fn characterise(
    curve: &Curve<'_>,
    xs: &[f64],
    ys: &[f64],
    i: usize,
    left_valley: usize,
    right_valley: usize,
) -> Result<ResonanceInfo> {
    let tol = curve.options.position_tolerance * xs[i];
    let (position, peak) = golden_max(|x| curve.value(x), xs[i - 1], xs[i + 1], tol)?;
    let half = 0.5 * peak;
    let mut overlapping = false;
    let left = match (left_valley..i).rev().find(|&j| ys[j] < half) {
        Some(j) => bisect_crossing(|x| curve.value(x), xs[j], xs[j + 1].min(position), half)?,
        None => {
            overlapping = true;
            xs[left_valley]
        }
    };
    let right = match (i + 1..=right_valley).find(|&j| ys[j] < half) {
        Some(j) => bisect_crossing(|x| curve.value(x), xs[j], xs[j - 1].max(position), half)?,
        None => {
            overlapping = true;
            xs[right_valley]
        }
    };
    Ok(ResonanceInfo {
        index: resonance_index(curve.profile, curve.ratio, position)?,
        position,
        fwhm: right - left,
        parity: curve.parity(position)?,
        peak,
        shallow: peak < SHALLOW_PEAK,
        overlapping,
    })
}

/// Maximum of a unimodal function on `[a, b]`; returns the abscissa and the value there.
fn golden_max<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    let best = [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |acc, p| if p.1 > acc.1 { p } else { acc });
    Ok(best)
}

/// Point between `below` (where `f < level`) and `above` (where `f >= level`) where `f` crosses `level`.
fn bisect_crossing<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut below: f64,
    mut above: f64,
    level: f64,
) -> Result<f64> {
    for _ in 0..60 {
        let mid = 0.5 * (below + above);
        if (above - below).abs() <= 1e-12 * mid.abs() {
            break;
        }
        if f(mid)? < level {
            below = mid;
        } else {
            above = mid;
        }
    }
    Ok(0.5 * (below + above))
}
