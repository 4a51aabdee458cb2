//! Bessel functions of the first kind for real, non-integer-negative order.
//!
//! Only the orders ±1/3 are part of the public contract; the general routine
//! is kept public because the asymptotic branch needs neighbouring orders for
//! derivatives.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::gamma::gamma;
use crate::error::{Error, Result};

/// Switch from the power series to the Hankel expansion.
///
/// At this argument the smallest Hankel term and the series cancellation error
/// are both near 1e-11 of the envelope `sqrt(2 / (pi x))`.
pub const BESSEL_CROSSOVER: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThirdOrder {
    Plus,
    Minus,
}

impl ThirdOrder {
    pub fn nu(self) -> f64 {
        match self {
            ThirdOrder::Plus => 1.0 / 3.0,
            ThirdOrder::Minus => -1.0 / 3.0,
        }
    }
}

/// `(J_nu(x), J'_nu(x))` for `nu = ±1/3`.
pub fn bessel_j_third(order: ThirdOrder, x: f64) -> Result<(f64, f64)> {
    bessel_j(order.nu(), x)
}

/// `(J_nu(x), J'_nu(x))` for `x > 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Bessel argument must be positive and finite, got {x}"
        )));
    }
    if nu < 0.0 && nu.fract() == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "negative integer order {nu} not supported"
        )));
    }
    if x < BESSEL_CROSSOVER {
        Ok(series(nu, x))
    } else {
        let j = hankel(nu, x);
        let j_next = hankel(nu + 1.0, x);
        Ok((j, nu / x * j - j_next))
    }
}

pub(crate) fn series(nu: f64, x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut value = term;
    let mut deriv = term * nu / x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        value += term;
        deriv += term * (2.0 * k + nu) / x;
        if k > half && term.abs() <= 1e-17 * value.abs().max(1e-300) {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    (value, deriv)
}

pub(crate) fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = a.abs();
        if mag > last {
            break;
        }
        last = mag;
        // (-1)^{floor(k/2)}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if mag < 1e-17 {
            break;
        }
    }
    let omega = x - FRAC_PI_2 * nu - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, J_{1/3}, J'_{1/3}, J_{-1/3}, J'_{-1/3}) from 30-digit arithmetic.
    const REFERENCE: &[(f64, f64, f64, f64, f64)] = &[
        (
            1e-6,
            0.0088882277331219669597,
            2962.7425777039892345,
            93.043671692888051336,
            -31014557.231032466533,
        ),
        (
            1e-3,
            0.088882260665810228208,
            29.627386891086314685,
            9.304363680154867472,
            -3101.4615383259527186,
        ),
        (
            0.1,
            0.41178185966121820961,
            1.3571519565521904591,
            1.997053656635270259,
            -6.8069624997121826875,
        ),
        (
            0.5,
            0.6728308294979460037,
            0.31979029015026649549,
            1.0644204672306240577,
            -1.1329243955048995327,
        ),
        (
            1.0,
            0.73087640216944804775,
            -0.055285175267421902034,
            0.6068875050465293454,
            -0.80024580868913828803,
        ),
        (
            2.0,
            0.44293981814857621225,
            -0.45613891806586749311,
            -0.075749980285132322903,
            -0.54434468020494897899,
        ),
        (
            5.0,
            -0.3064204638002641663,
            0.21289098026261126435,
            0.0043398906180296340679,
            0.35683600945048666566,
        ),
        (
            11.9,
            -0.092255962141642467555,
            0.21601403015183613093,
            0.13750279605545154785,
            0.18023362132985366634,
        ),
        (
            12.0,
            -0.070321367704581810823,
            0.22230630447017286801,
            0.15473648076531898063,
            0.16417740140273739422,
        ),
        (
            12.1,
            -0.047869628728071912014,
            0.22635149614809858487,
            0.17028866305173693568,
            0.14663322131691794714,
        ),
        (
            20.0,
            0.17606058001293899764,
            0.024382686873937090212,
            0.11295251588168025124,
            -0.14093080315252672328,
        ),
        (
            100.0,
            -0.021271244853702540181,
            0.077007393659066655091,
            0.055962168434210227263,
            0.056592278819082115538,
        ),
        (
            333.3333333333333,
            0.024172352061829114569,
            0.036371943562632598603,
            0.043616584202117592246,
            -0.0027952078100764639574,
        ),
        (
            1000.0,
            0.02382432112156392699,
            0.0082960033943986775748,
            0.019107025982797277118,
            -0.016488064487012588633,
        ),
    ];

    fn close(got: f64, want: f64, x: f64) -> bool {
        // relative to the larger of the value and the oscillation envelope
        let scale = want.abs().max((2.0 / (PI * x)).sqrt().min(1.0));
        (got - want).abs() <= 1e-10 * scale
    }

    #[test]
    fn matches_high_precision_reference() {
        for &(x, jp, djp, jm, djm) in REFERENCE {
            let (a, da) = bessel_j_third(ThirdOrder::Plus, x).unwrap();
            let (b, db) = bessel_j_third(ThirdOrder::Minus, x).unwrap();
            assert!(close(a, jp, x), "J_1/3({x}) = {a}, want {jp}");
            assert!(close(b, jm, x), "J_-1/3({x}) = {b}, want {jm}");
            let dscale = |v: f64| v.abs().max(1.0 / x).max(1e-300);
            assert!(
                (da - djp).abs() <= 1e-10 * dscale(djp),
                "J'_1/3({x}) = {da}, want {djp}"
            );
            assert!(
                (db - djm).abs() <= 1e-10 * dscale(djm),
                "J'_-1/3({x}) = {db}, want {djm}"
            );
        }
    }

    #[test]
    fn small_argument_leading_term() {
        let x = 1e-6;
        let (j, _) = bessel_j_third(ThirdOrder::Plus, x).unwrap();
        let lead = (0.5 * x).powf(1.0 / 3.0) / gamma(4.0 / 3.0);
        assert!(((j - lead) / lead).abs() < 1e-6);
    }

    #[test]
    fn wronskian() {
        for &x in &[0.1, 1.0, 10.0, 100.0] {
            let (jp, djp) = bessel_j_third(ThirdOrder::Plus, x).unwrap();
            let (jm, djm) = bessel_j_third(ThirdOrder::Minus, x).unwrap();
            let w = jp * djm - jm * djp;
            let want = -2.0 * (PI / 3.0).sin() / (PI * x);
            assert!(((w - want) / want).abs() < 1e-9, "x={x}: {w} vs {want}");
        }
    }

    #[test]
    fn large_argument_phase() {
        let x = 100.0;
        for order in [ThirdOrder::Plus, ThirdOrder::Minus] {
            let (j, _) = bessel_j_third(order, x).unwrap();
            let lead = (2.0 / (PI * x)).sqrt() * (x - order.nu() * FRAC_PI_2 - FRAC_PI_4).cos();
            assert!((j - lead).abs() < 1e-4);
        }
    }

    #[test]
    fn crossover_is_continuous() {
        for nu in [1.0 / 3.0, -1.0 / 3.0] {
            let x = BESSEL_CROSSOVER;
            let (s, ds) = series(nu, x);
            let a = hankel(nu, x);
            let da = nu / x * a - hankel(nu + 1.0, x);
            assert!((s - a).abs() < 1e-10, "nu={nu}: {s} vs {a}");
            assert!((ds - da).abs() < 1e-10, "nu={nu}: {ds} vs {da}");
        }
    }

    #[test]
    fn rejects_nonpositive_argument() {
        assert!(bessel_j_third(ThirdOrder::Plus, 0.0).is_err());
        assert!(bessel_j_third(ThirdOrder::Minus, -1.0).is_err());
    }
}
