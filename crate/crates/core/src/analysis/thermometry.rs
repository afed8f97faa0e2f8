//! Primary thermometry from the anti-Stokes/Stokes area ratio.

use super::calibrate::CalibrationResult;
use super::correct::mode_temperature;
use super::fit::FitResult;
use crate::error::{Error, Result};
use crate::optomech::Scheme;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryResult {
    pub ratio: f64,
    pub sigma_ratio: f64,
    /// High-temperature limit of the ratio at this drive.
    pub bound: f64,
    pub n: f64,
    pub sigma_n: f64,
    pub temperature: f64,
    pub sigma_temperature: f64,
}

/// Population from an anti-Stokes/Stokes area ratio at equal drive, with
/// a = Γ_m, b = Γ_opt and the calibrated noise photons of each scheme.
pub fn population_from_ratio(ratio: f64, calib: &CalibrationResult, n_cav: f64) -> f64 {
    let a = calib.gamma_m_est;
    let b = calib.gamma_opt(n_cav);
    // noise photons without the blue zero-point quantum, which is explicit below
    let n_blue = calib.noise_photons(Scheme::BlueDetuned, n_cav) - 1.0;
    let n_red = calib.noise_photons(Scheme::RedDetuned, n_cav);
    (ratio * (a + n_blue * b) * (a + b) - n_red * b * (a - b)) / (a * ((a - b) - ratio * (a + b)))
}

/// Temperature from a Stokes (blue-pump) and anti-Stokes (red-pump) fit
/// taken at the same drive `n_cav`.
pub fn asymmetry_thermometry(
    stokes: &FitResult,
    antistokes: &FitResult,
    calib: &CalibrationResult,
    n_cav: f64,
    omega_m: f64,
) -> Result<AsymmetryResult> {
    if !(stokes.converged && antistokes.converged) {
        return Err(Error::Numerical("both sideband fits must have converged".into()));
    }
    let (a, b) = (calib.gamma_m_est, calib.gamma_opt(n_cav));
    if b >= a {
        return Err(Error::SelfOscillation { gamma_m: a, gamma_opt: b });
    }
    let bound = (a - b) / (a + b);
    let ratio = antistokes.area / stokes.area;
    let sigma_ratio = ratio
        * ((antistokes.sigma_area / antistokes.area).powi(2) + (stokes.sigma_area / stokes.area).powi(2)).sqrt();
    // the noise terms shift the ratio at n → 0 and n → ∞; the invertible range is between
    let lo = population_ratio(0.0, calib, n_cav);
    if !(ratio > lo.max(0.0) && ratio < bound) {
        return Err(Error::Domain(format!(
            "area ratio {ratio:.4} outside the invertible range ({:.4}, {bound:.4}); at the bound the temperature diverges",
            lo.max(0.0)
        )));
    }
    let n = population_from_ratio(ratio, calib, n_cav);
    let h = 1e-6 * ratio;
    let dn = (population_from_ratio(ratio + h, calib, n_cav) - population_from_ratio(ratio - h, calib, n_cav)) / (2.0 * h);
    let sigma_n = (dn * sigma_ratio).abs();
    let temperature = mode_temperature(n, omega_m)
        .ok_or_else(|| Error::Domain(format!("population {n:.4} is not positive")))?;
    let ht = 1e-6 * n;
    let dt = (mode_temperature(n + ht, omega_m).unwrap_or(f64::NAN) - mode_temperature((n - ht).max(1e-300), omega_m).unwrap_or(f64::NAN)) / (2.0 * ht);
    Ok(AsymmetryResult { ratio, sigma_ratio, bound, n, sigma_n, temperature, sigma_temperature: (dt * sigma_n).abs() })
}

/// Forward ratio at population `n` under the same calibration.
pub fn population_ratio(n: f64, calib: &CalibrationResult, n_cav: f64) -> f64 {
    let a = calib.gamma_m_est;
    let b = calib.gamma_opt(n_cav);
    let n_blue = calib.noise_photons(Scheme::BlueDetuned, n_cav) - 1.0;
    let n_red = calib.noise_photons(Scheme::RedDetuned, n_cav);
    let red = (n * a + n_red * b) / (a + b);
    let blue = ((n + 1.0) * a + n_blue * b) / (a - b);
    red / blue
}
