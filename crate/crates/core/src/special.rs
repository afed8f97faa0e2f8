//! Special functions.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma function ψ(z) for complex `z` away from the non-positive integers.
///
/// Upward recurrence ψ(z) = ψ(z + 1) − 1/z until |z| > 8, then the
/// asymptotic Bernoulli series.
pub fn digamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() <= 8.0 {
        acc -= z.inv();
        z += 1.0;
    }
    // B_2k / (2k) for k = 1..7
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let w = (z * z).inv();
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = w;
    for c in C {
        series += p * c;
        p *= w;
    }
    acc + z.ln() - 0.5 * z.inv() - series
}

/// ψ for real positive arguments.
pub fn digamma_real(x: f64) -> f64 {
    digamma(Complex64::new(x, 0.0)).re
}

/// ψ(1/2) = −γ − 2 ln 2.
pub fn digamma_half() -> f64 {
    -EULER_GAMMA - 2.0 * std::f64::consts::LN_2
}
