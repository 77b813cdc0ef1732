//! Gamma function and sphere/ball constants.

use std::f64::consts::PI;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real x, with the reflection formula below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Surface measure |𝕊^{N−1}| = 2π^{N/2} / Γ(N/2) of the unit sphere in ℝᴺ.
///
/// |𝕊⁰| = 2 counts the two points ±1.
pub fn sphere_area(dimension: usize) -> f64 {
    let half = dimension as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Lebesgue measure of the unit ball in ℝᴺ.
pub fn ball_volume(dimension: usize) -> f64 {
    sphere_area(dimension) / dimension as f64
}
