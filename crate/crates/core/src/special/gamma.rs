use std::f64::consts::PI;

/// Lanczos approximation (g = 7, nine coefficients), reflected below 1/2.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// The Gamma values entering the small-argument Bessel series, and the
/// large-xi prefactor `alpha = (2/9)^(1/3) Gamma(2/3) / Gamma(4/3)`.
#[derive(Debug, Clone, Copy)]
pub struct GammaConstants {
    pub gamma_one_third: f64,
    pub gamma_two_thirds: f64,
    pub gamma_four_thirds: f64,
    pub alpha: f64,
}

pub const GAMMA_CONSTANTS: GammaConstants = GammaConstants {
    gamma_one_third: 2.678_938_534_707_747_6,
    gamma_two_thirds: 1.354_117_939_426_400_4,
    gamma_four_thirds: 0.892_979_511_569_249_2,
    alpha: 0.918_496_472_007_921_2,
};
