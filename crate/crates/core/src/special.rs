//! Complex log-gamma and digamma.
//!
//! `ln_gamma` uses the Lanczos approximation (g = 7, 9 coefficients) on the
//! right half-plane and the reflection formula elsewhere. Branch offsets of
//! 2πi can appear across the reflection cut; every consumer in this crate
//! exponentiates the result or takes its real part, so only exp(ln_gamma)
//! is contractual. `digamma` shifts the argument by recurrence and finishes
//! with the Stirling-type asymptotic series.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal-branch-style complex log-gamma; exp(ln_gamma(z)) = Γ(z).
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1-z) = π / sin(πz)
        Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(Complex64::new(1.0, 0.0) - z)
    } else {
        let x = z - 1.0;
        let mut t = Complex64::new(LANCZOS[0], 0.0);
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            t += c / (x + i as f64);
        }
        let w = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * w.ln() - w + t.ln()
    }
}

/// Γ(z) itself; overflows to infinity for large arguments, use [`ln_gamma`] there.
pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// log(sin(πz)) computed without overflow for large |Im z|.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let ln_2i = Complex64::new(2.0_f64.ln(), PI / 2.0);
    if z.im >= 0.0 {
        // sin πz = e^{-iπz} (e^{2iπz} - 1) / (2i), |e^{2iπz}| <= 1
        let small = (2.0 * i * PI * z).exp();
        -i * PI * z + (small - 1.0).ln() - ln_2i
    } else {
        let small = (-2.0 * i * PI * z).exp();
        i * PI * z + (1.0 - small).ln() - ln_2i
    }
}

/// Digamma ψ(z) = d/dz ln Γ(z).
pub fn digamma(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        // ψ(z) = ψ(1-z) - π cot(πz)
        return digamma(Complex64::new(1.0, 0.0) - z) - PI * cot_pi(z);
    }
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.re < 10.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    // Stirling series: ln w - 1/2w - sum B_{2k}/(2k w^{2k})
    let inv2 = 1.0 / (w * w);
    let mut series = Complex64::new(0.0, 0.0);
    let coeffs = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let mut p = inv2;
    for c in coeffs {
        series += c * p;
        p *= inv2;
    }
    acc + w.ln() - 0.5 / w - series
}

/// cot(πz), overflow-safe for large |Im z|.
fn cot_pi(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if z.im >= 0.0 {
        let r = (2.0 * i * PI * z).exp();
        i * (r + 1.0) / (r - 1.0)
    } else {
        let r = (-2.0 * i * PI * z).exp();
        i * (1.0 + r) / (1.0 - r)
    }
}
