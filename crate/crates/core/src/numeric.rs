//! Exact numerical solution of the channel equation
//! `phi'' + [(kL)^2 ∓ (kappa_n L)^2 u(z)] phi = 0` (derivatives in `z/L`).
//!
//! The primary path integrates the even (`phi = 1, phi' = 0`) and odd
//! (`phi = 0, phi' = 1`) solutions from the cavity centre to `z = -L/2` with
//! fixed-step RK4 and reads off the edge log-derivatives. Two independent
//! checks live here as well: a Riccati propagation of `phi'/phi` and a
//! piecewise-constant transfer-matrix oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::UniformSampler;
use crate::scattering::{
    amplitudes_from_logderivs, ChannelAmplitudes, LogDerivativePair, ScatteringParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Phase advanced per step, `q_max * h`, on the reference level.
    pub phase_step: f64,
    /// Convergence threshold on the edge phase factors `e^{2i delta}`.
    pub tolerance: f64,
    /// Step halvings allowed after the first Richardson check.
    pub max_refinements: u32,
    /// The state vector is rescaled once its max-norm passes this value.
    pub renormalize_above: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            phase_step: 0.02,
            tolerance: 1e-8,
            max_refinements: 4,
            renormalize_above: 1e100,
        }
    }
}

/// Solution value and slope at the cavity edge, scaled by `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeState {
    pub value: f64,
    pub slope: f64,
    pub log_scale: f64,
}

impl EdgeState {
    fn rescaled_to(self, log_scale: f64) -> (f64, f64) {
        let f = (self.log_scale - log_scale).exp();
        (self.value * f, self.slope * f)
    }

    /// `(kL phi + i phi') / (kL phi - i phi')`, the unit phase factor fed into the amplitudes.
    pub fn phase_factor(self, k_l: f64) -> Complex64 {
        let m = self.value.abs().max(self.slope.abs());
        if m == 0.0 {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let num = Complex64::new(k_l * self.value / m, self.slope / m);
        num / num.conj()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvenOddSolution {
    pub pair: LogDerivativePair,
    pub even: EdgeState,
    pub odd: EdgeState,
    /// Difference between the two Richardson estimates on the last check.
    pub error_estimate: f64,
    pub converged: bool,
    /// RK4 steps taken over all levels, per parity.
    pub steps: u64,
}

impl EvenOddSolution {
    pub fn amplitudes(&self, k_l: f64) -> ChannelAmplitudes {
        amplitudes_from_logderivs(self.pair, k_l)
    }
}

fn reference_steps(params: &ScatteringParams, config: &IntegratorConfig) -> u64 {
    let q = params.max_local_wavenumber().max(1.0);
    let n = (0.5 * q / config.phase_step).ceil() as u64;
    // even so that the coarse level has an integer step count
    (n.max(16) + 1) & !1
}

/// Steps needed for one channel without refinement: coarse, reference and fine levels.
pub fn estimated_steps(params: &ScatteringParams, config: &IntegratorConfig) -> f64 {
    3.5 * reference_steps(params, config) as f64
}

/// Edge log-derivatives of the even and odd eigensolutions.
pub fn integrate_even_odd(
    params: &ScatteringParams,
    config: &IntegratorConfig,
) -> Result<LogDerivativePair> {
    solve_even_odd(params, config).map(|s| s.pair)
}

pub fn solve_even_odd(
    params: &ScatteringParams,
    config: &IntegratorConfig,
) -> Result<EvenOddSolution> {
    propagate_to_edge(params, config, [(1.0, 0.0), (0.0, 1.0)])
}

/// Integrates two solutions with the given `(phi, phi')` at `z = 0` to the edge.
///
/// The first initial condition is reported as `even`, the second as `odd`.
pub fn propagate_to_edge(
    params: &ScatteringParams,
    config: &IntegratorConfig,
    initial: [(f64, f64); 2],
) -> Result<EvenOddSolution> {
    if !(config.phase_step > 0.0) || !(config.tolerance > 0.0) {
        return Err(Error::InvalidParameter(
            "integrator step and tolerance must be positive".into(),
        ));
    }
    let k_l = params.k_l;
    let mut n = reference_steps(params, config);
    let mut coarse = rk4_run(params, config, n / 2, initial)?;
    let mut middle = rk4_run(params, config, n, initial)?;
    let mut steps = n / 2 + n;
    let mut refinements = 0;
    loop {
        let fine = rk4_run(params, config, 2 * n, initial)?;
        steps += 2 * n;
        let e1 = extrapolate(coarse, middle);
        let e2 = extrapolate(middle, fine);
        let error = phase_distance(e1, e2, k_l);
        let converged = error <= config.tolerance;
        if converged || refinements >= config.max_refinements || !error.is_finite() {
            let [even, odd] = e2;
            return Ok(EvenOddSolution {
                pair: LogDerivativePair::from_edge_values(
                    (even.value, even.slope),
                    (odd.value, odd.slope),
                ),
                even,
                odd,
                error_estimate: error,
                converged,
                steps,
            });
        }
        refinements += 1;
        n *= 2;
        coarse = middle;
        middle = fine;
    }
}

fn extrapolate(coarse: [EdgeState; 2], fine: [EdgeState; 2]) -> [EdgeState; 2] {
    let mut out = fine;
    for i in 0..2 {
        let s = coarse[i].log_scale.max(fine[i].log_scale);
        let (vc, dc) = coarse[i].rescaled_to(s);
        let (vf, df) = fine[i].rescaled_to(s);
        out[i] = EdgeState {
            value: (16.0 * vf - vc) / 15.0,
            slope: (16.0 * df - dc) / 15.0,
            log_scale: s,
        };
    }
    out
}

fn phase_distance(a: [EdgeState; 2], b: [EdgeState; 2], k_l: f64) -> f64 {
    (0..2)
        .map(|i| (a[i].phase_factor(k_l) - b[i].phase_factor(k_l)).norm())
        .fold(0.0, f64::max)
}

fn rk4_run(
    params: &ScatteringParams,
    config: &IntegratorConfig,
    steps: u64,
    initial: [(f64, f64); 2],
) -> Result<[EdgeState; 2]> {
    let h = 0.5 / steps as f64;
    let dx = -h;
    let kn = params.kappa_n_l();
    let k2 = params.k_l * params.k_l;
    let coupling = params.channel.sign() * kn * kn;
    let mut sampler = UniformSampler::new(params.profile, 0.5 * h);
    let mut p0 = k2 - coupling * sampler.next_value();

    let (mut a0, mut a1) = initial[0];
    let (mut b0, mut b1) = initial[1];
    let (mut sa, mut sb) = (0.0f64, 0.0f64);
    let limit = config.renormalize_above;

    for j in 0..steps {
        let pm = k2 - coupling * sampler.next_value();
        let p1 = k2 - coupling * sampler.next_value();
        rk4_step(&mut a0, &mut a1, p0, pm, p1, dx);
        rk4_step(&mut b0, &mut b1, p0, pm, p1, dx);
        p0 = p1;

        let ma = a0.abs().max(a1.abs());
        if ma > limit {
            a0 /= ma;
            a1 /= ma;
            sa += ma.ln();
        }
        let mb = b0.abs().max(b1.abs());
        if mb > limit {
            b0 /= mb;
            b1 /= mb;
            sb += mb.ln();
        }
        if !(ma.is_finite() && mb.is_finite()) {
            return Err(Error::IntegrationFailure {
                z_over_l: -((j + 1) as f64) * h,
                reason: "non-finite solution state".into(),
            });
        }
    }
    Ok([
        EdgeState {
            value: a0,
            slope: a1,
            log_scale: sa,
        },
        EdgeState {
            value: b0,
            slope: b1,
            log_scale: sb,
        },
    ])
}

#[inline(always)]
fn rk4_step(y: &mut f64, v: &mut f64, p0: f64, pm: f64, p1: f64, dx: f64) {
    let half = 0.5 * dx;
    let k1y = *v;
    let k1v = -p0 * *y;
    let y2 = *y + half * k1y;
    let v2 = *v + half * k1v;
    let k2y = v2;
    let k2v = -pm * y2;
    let y3 = *y + half * k2y;
    let v3 = *v + half * k2v;
    let k3y = v3;
    let k3v = -pm * y3;
    let y4 = *y + dx * k3y;
    let v4 = *v + dx * k3v;
    let k4y = v4;
    let k4v = -p1 * y4;
    *y += dx / 6.0 * (k1y + 2.0 * (k2y + k3y) + k4y);
    *v += dx / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v);
}

/// Edge log-derivatives from a Riccati propagation of `y = phi'/phi`.
///
/// Near a node of `phi` the equation switches to `w = phi/phi'`
/// (`w' = 1 + P w^2`), and back once `|y|` is moderate again. The result
/// is the Richardson combination of two step sizes.
pub fn riccati_even_odd(
    params: &ScatteringParams,
    config: &IntegratorConfig,
) -> Result<LogDerivativePair> {
    let n = reference_steps(params, config);
    let scale = params.max_local_wavenumber().max(1.0);
    let k_l = params.k_l;
    let mut out = [0.0; 2];
    for (i, start) in [Riccati::Y(0.0), Riccati::W(0.0)].into_iter().enumerate() {
        let coarse = riccati_run(params, n, start, scale)?.edge_angle(k_l);
        let fine = riccati_run(params, 2 * n, start, scale)?.edge_angle(k_l);
        let angle = fine + wrap_half_pi(fine - coarse) / 15.0;
        out[i] = k_l * angle.tan();
    }
    Ok(LogDerivativePair::new(out[0], out[1]))
}

#[derive(Debug, Clone, Copy)]
enum Riccati {
    Y(f64),
    W(f64),
}

impl Riccati {
    /// `atan(beta / kL)` in `(-pi/2, pi/2]`.
    fn edge_angle(self, k_l: f64) -> f64 {
        match self {
            Riccati::Y(y) => (y / k_l).atan(),
            Riccati::W(w) => {
                let a = (1.0f64).atan2(k_l * w);
                if a > std::f64::consts::FRAC_PI_2 {
                    a - std::f64::consts::PI
                } else {
                    a
                }
            }
        }
    }
}

fn wrap_half_pi(d: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut d = d % PI;
    if d > FRAC_PI_2 {
        d -= PI;
    } else if d < -FRAC_PI_2 {
        d += PI;
    }
    d
}

fn riccati_run(
    params: &ScatteringParams,
    steps: u64,
    start: Riccati,
    scale: f64,
) -> Result<Riccati> {
    let h = 0.5 / steps as f64;
    let dx = -h;
    let kn = params.kappa_n_l();
    let k2 = params.k_l * params.k_l;
    let coupling = params.channel.sign() * kn * kn;
    let mut sampler = UniformSampler::new(params.profile, 0.5 * h);
    let mut p0 = k2 - coupling * sampler.next_value();
    let mut state = start;
    for j in 0..steps {
        let pm = k2 - coupling * sampler.next_value();
        let p1 = k2 - coupling * sampler.next_value();
        state = match state {
            Riccati::Y(y) if y.abs() > 2.0 * scale => Riccati::W(1.0 / y),
            Riccati::W(w) if w.abs() * scale > 2.0 => Riccati::Y(1.0 / w),
            s => s,
        };
        state = match state {
            Riccati::Y(y) => Riccati::Y(rk4_scalar(y, dx, |y, p| -p - y * y, p0, pm, p1)),
            Riccati::W(w) => Riccati::W(rk4_scalar(w, dx, |w, p| 1.0 + p * w * w, p0, pm, p1)),
        };
        p0 = p1;
        let v = match state {
            Riccati::Y(v) | Riccati::W(v) => v,
        };
        if !v.is_finite() {
            return Err(Error::IntegrationFailure {
                z_over_l: -((j + 1) as f64) * h,
                reason: "Riccati variable diverged".into(),
            });
        }
    }
    Ok(state)
}

#[inline(always)]
fn rk4_scalar(y: f64, dx: f64, f: impl Fn(f64, f64) -> f64, p0: f64, pm: f64, p1: f64) -> f64 {
    let k1 = f(y, p0);
    let k2 = f(y + 0.5 * dx * k1, pm);
    let k3 = f(y + 0.5 * dx * k2, pm);
    let k4 = f(y + dx * k3, p1);
    y + dx / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
}

/// Reflection and transmission from a staircase approximation of the mode.
///
/// The mode is replaced by `slices` constant steps (value at each slice
/// midpoint) and the exact `(phi, phi')` transfer matrix of every step is
/// applied to the outgoing wave `e^{ikz}` from `z = L/2` back to `z = -L/2`.
/// Amplitudes use the same phase convention as the log-derivative path.
pub fn transfer_matrix_oracle(
    params: &ScatteringParams,
    slices: usize,
) -> Result<ChannelAmplitudes> {
    if slices == 0 {
        return Err(Error::InvalidParameter(
            "oracle needs at least one slice".into(),
        ));
    }
    let k = params.k_l;
    let kn = params.kappa_n_l();
    let coupling = params.channel.sign() * kn * kn;
    let h = 1.0 / slices as f64;
    let i = Complex64::i();
    let mut phi = Complex64::from_polar(1.0, 0.5 * k);
    let mut dphi = i * k * phi;
    for j in (0..slices).rev() {
        let mid = -0.5 + (j as f64 + 0.5) * h;
        let p = k * k - coupling * params.profile.evaluate(mid);
        let (a, b, c, d) = if p > 0.0 {
            let q = p.sqrt();
            let (s, co) = (q * h).sin_cos();
            (co, -s / q, q * s, co)
        } else if p < 0.0 {
            let q = (-p).sqrt();
            let (s, co) = ((q * h).sinh(), (q * h).cosh());
            (co, -s / q, -q * s, co)
        } else {
            (1.0, -h, 0.0, 1.0)
        };
        let next = a * phi + b * dphi;
        dphi = c * phi + d * dphi;
        phi = next;
        if !(phi.norm() < 1e250 && dphi.norm() < 1e250) {
            return Err(Error::OracleOverflow { kappa_n_l: kn });
        }
    }
    let x = -0.5;
    let forward = 0.5 * (phi + dphi / (i * k)) * Complex64::from_polar(1.0, -k * x);
    let backward = 0.5 * (phi - dphi / (i * k)) * Complex64::from_polar(1.0, k * x);
    Ok(ChannelAmplitudes {
        r: backward / forward,
        t: 1.0 / forward,
    })
}
