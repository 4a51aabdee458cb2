//! Adaptive Gauss–Kronrod quadrature with an optional change of variables that
//! removes square-root endpoint behaviour (turning points).

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 50;
const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Which ends of the interval carry an integrable `sqrt` singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoints {
    Regular,
    Left,
    Right,
    Both,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute error `tol`.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Quadrature> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut intervals = 0;
    let mut converged = true;
    while let Some((lo, hi, local_tol, depth)) = stack.pop() {
        let (v, e) = kronrod(&f, lo, hi);
        evaluations += 15;
        intervals += 1;
        if !v.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                estimate: v,
                error: f64::INFINITY,
            });
        }
        if e <= local_tol || depth >= MAX_DEPTH || intervals >= MAX_INTERVALS {
            if e > local_tol {
                converged = false;
            }
            value += v;
            error += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * local_tol, depth + 1));
            stack.push((mid, hi, 0.5 * local_tol, depth + 1));
        }
    }
    if !converged && error > tol {
        return Err(Error::QuadratureNonConvergence {
            estimate: value,
            error,
        });
    }
    Ok(Quadrature {
        value,
        error,
        evaluations,
    })
}

/// Integrates `f` over `[a, b]` where `f` behaves like `sqrt(x - a)` and/or
/// `sqrt(b - x)` at the flagged ends.
///
/// A flagged endpoint is mapped through `x = end ∓ (b - a) s^2`, which turns
/// the square-root cusp into a smooth integrand in `s`.
pub fn integrate_sqrt_endpoints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    ends: Endpoints,
) -> Result<Quadrature> {
    match ends {
        Endpoints::Regular => adaptive_quadrature(f, a, b, tol),
        Endpoints::Left => {
            let w = b - a;
            adaptive_quadrature(|s| 2.0 * w * s * f(a + w * s * s), 0.0, 1.0, tol)
        }
        Endpoints::Right => {
            let w = b - a;
            adaptive_quadrature(|s| 2.0 * w * s * f(b - w * s * s), 0.0, 1.0, tol)
        }
        Endpoints::Both => {
            let mid = 0.5 * (a + b);
            let w = mid - a;
            let left =
                adaptive_quadrature(|s| 2.0 * w * s * f(a + w * s * s), 0.0, 1.0, 0.5 * tol)?;
            let right =
                adaptive_quadrature(|s| 2.0 * w * s * f(b - w * s * s), 0.0, 1.0, 0.5 * tol)?;
            Ok(Quadrature {
                value: left.value + right.value,
                error: left.error + right.error,
                evaluations: left.evaluations + right.evaluations,
            })
        }
    }
}
