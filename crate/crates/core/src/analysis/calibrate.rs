//! Power-sweep calibration: coupling, intrinsic damping and technical heating.

use nalgebra::{Matrix2, Vector2};

use super::fit::FitResult;
use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::optomech::{Scheme, SystemParams};

/// One fitted spectrum of a power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub n_cav: f64,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub kappa_tot: f64,
    pub omega_m: f64,
    /// Drive at which the technical-heating coefficient is quoted, photons.
    pub n_ref: f64,
    /// Known thermal cavity population.
    pub n_cav_noise: f64,
    /// Include the (κ/4ω_m)² red-scheme back-action floor.
    pub backaction_floor: bool,
    pub fit_technical_heating: bool,
    pub exponent_range: (f64, f64),
    /// Relative red/blue slope mismatch that raises a warning.
    pub slope_tolerance: f64,
}

impl CalibrationSettings {
    pub fn for_system(sys: &SystemParams) -> Self {
        CalibrationSettings {
            kappa_tot: sys.kappa_tot,
            omega_m: sys.omega_m0,
            n_ref: 300.0,
            n_cav_noise: 0.0,
            backaction_floor: true,
            fit_technical_heating: true,
            exponent_range: (0.5, 4.0),
            slope_tolerance: 0.2,
        }
    }
}

/// Area normalised to drive and linewidth, A·W/Γ_opt (red) or the
/// zero-point-subtracted equivalent (blue): nΓ_m plus the cavity-noise term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedArea {
    pub scheme: Scheme,
    pub n_cav: f64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub g0_est: f64,
    pub sigma_g0: f64,
    pub gamma_m_est: f64,
    pub sigma_gamma_m: f64,
    /// Γ_opt per cavity photon, rad/s.
    pub gamma_opt_per_photon: f64,
    pub slope_red: Option<f64>,
    pub slope_blue: Option<f64>,
    pub single_scheme: bool,
    pub tech_coeff: f64,
    pub sigma_tech_coeff: f64,
    pub tech_exponent: f64,
    /// n Γ_m recovered from the normalised areas, rad/s.
    pub thermal_term: f64,
    pub n_ref: f64,
    pub n_cav_noise: f64,
    pub backaction_floor: f64,
    pub kappa_tot: f64,
    pub normalized_areas: Vec<NormalizedArea>,
    pub warnings: Vec<String>,
}

impl CalibrationResult {
    /// Calibration taken directly from known device constants, no sweep.
    pub fn from_known(sys: &SystemParams, gamma_m: f64, tech_coeff: f64, tech_exponent: f64, n_ref: f64, n_cav_noise: f64, floor: bool) -> Self {
        CalibrationResult {
            g0_est: sys.g0,
            sigma_g0: 0.0,
            gamma_m_est: gamma_m,
            sigma_gamma_m: 0.0,
            gamma_opt_per_photon: 4.0 * sys.g0 * sys.g0 / sys.kappa_tot,
            slope_red: None,
            slope_blue: None,
            single_scheme: false,
            tech_coeff,
            sigma_tech_coeff: 0.0,
            tech_exponent,
            thermal_term: f64::NAN,
            n_ref,
            n_cav_noise,
            backaction_floor: if floor { (sys.kappa_tot / (4.0 * sys.omega_m0)).powi(2) } else { 0.0 },
            kappa_tot: sys.kappa_tot,
            normalized_areas: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn gamma_opt(&self, n_cav: f64) -> f64 {
        self.gamma_opt_per_photon * n_cav
    }

    pub fn technical_photons(&self, n_cav: f64) -> f64 {
        if n_cav <= 0.0 {
            return 0.0;
        }
        self.tech_coeff * (n_cav / self.n_ref).powf(self.tech_exponent)
    }

    /// N_noise of the effective-population formula.
    pub fn noise_photons(&self, scheme: Scheme, n_cav: f64) -> f64 {
        let base = self.n_cav_noise + self.technical_photons(n_cav);
        match scheme {
            Scheme::BlueDetuned => base + 1.0,
            Scheme::RedDetuned => base + self.backaction_floor,
        }
    }
}

/// Weighted straight line y = c0 + c1·x; returns (coeffs, covariance).
fn weighted_line(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let mut a = Matrix2::zeros();
    let mut b = Vector2::zeros();
    for ((&xi, &yi), &si) in x.iter().zip(y).zip(sigma) {
        let w = 1.0 / (si * si);
        let g = Vector2::new(1.0, xi);
        a += g * g.transpose() * w;
        b += g * (w * yi);
    }
    let cov = a.try_inverse().ok_or_else(|| Error::Numerical("singular width-vs-power fit".into()))?;
    Ok((cov * b, cov))
}

fn usable_sigma(s: f64, value: f64) -> f64 {
    if s.is_finite() && s > 0.0 {
        s
    } else {
        1e-3 * value.abs().max(1e-300)
    }
}

/// Technical-heating fit at fixed exponent: Y = α + c·Γ_o·(n/n_ref)^a.
fn tech_linear(g_opt: &[f64], n: &[f64], y: &[f64], s: &[f64], n_ref: f64, a: f64) -> Option<(Vector2<f64>, Matrix2<f64>, f64)> {
    let x: Vec<f64> = g_opt.iter().zip(n).map(|(g, n)| g * (n / n_ref).powf(a)).collect();
    let (p, cov) = weighted_line(&x, y, s).ok()?;
    let chi2 = x.iter().zip(y).zip(s).map(|((x, y), s)| ((y - p[0] - p[1] * x) / s).powi(2)).sum();
    Some((p, cov, chi2))
}

/// Joint width-versus-power fit across schemes, then technical heating
/// from the normalised areas.
pub fn calibrate_power_sweep(points: &[SweepPoint], settings: &CalibrationSettings) -> Result<CalibrationResult> {
    let count = |s: Scheme| points.iter().filter(|p| p.scheme == s).count();
    let (n_red, n_blue) = (count(Scheme::RedDetuned), count(Scheme::BlueDetuned));
    for (s, k) in [(Scheme::RedDetuned, n_red), (Scheme::BlueDetuned, n_blue)] {
        if k > 0 && k < 3 {
            return Err(Error::Config(format!("{s} sweep has {k} powers; at least 3 are required")));
        }
    }
    if n_red + n_blue == 0 {
        return Err(Error::Config("empty power sweep".into()));
    }
    let good: Vec<&SweepPoint> = points.iter().filter(|p| p.fit.converged).collect();
    let mut warnings = Vec::new();
    if good.len() < points.len() {
        warnings.push(format!("{} of {} sweep fits did not converge and were dropped", points.len() - good.len(), points.len()));
    }
    let single_scheme = n_red == 0 || n_blue == 0;
    if single_scheme {
        warnings.push("single-scheme sweep: g0 and gamma_m from one slope only".into());
    }

    // joint fit of W = Γ_m ± s n
    let x: Vec<f64> = good.iter().map(|p| p.scheme.damping_sign() * p.n_cav).collect();
    let y: Vec<f64> = good.iter().map(|p| TWO_PI * p.fit.width).collect();
    let sy: Vec<f64> = good.iter().map(|p| TWO_PI * usable_sigma(p.fit.sigma_width, p.fit.width)).collect();
    if good.len() < 3 {
        return Err(Error::Numerical(format!("only {} converged sweep fits", good.len())));
    }
    let (coef, cov) = weighted_line(&x, &y, &sy)?;
    let (gamma_m, slope) = (coef[0], coef[1]);
    if !(slope > 0.0) {
        return Err(Error::Numerical(format!("width-vs-power slope {slope:.3e} is not positive")));
    }
    if !(gamma_m > 0.0) {
        return Err(Error::Numerical(format!("zero-power linewidth {gamma_m:.3e} is not positive")));
    }

    let per_scheme = |s: Scheme| -> Option<f64> {
        let idx: Vec<usize> = (0..good.len()).filter(|&i| good[i].scheme == s).collect();
        if idx.len() < 3 {
            return None;
        }
        let xs: Vec<f64> = idx.iter().map(|&i| good[i].n_cav).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let ss: Vec<f64> = idx.iter().map(|&i| sy[i]).collect();
        weighted_line(&xs, &ys, &ss).ok().map(|(c, _)| c[1].abs())
    };
    let slope_red = per_scheme(Scheme::RedDetuned);
    let slope_blue = per_scheme(Scheme::BlueDetuned);
    if let (Some(r), Some(b)) = (slope_red, slope_blue) {
        let mismatch = (r - b).abs() / (0.5 * (r + b));
        if mismatch > settings.slope_tolerance {
            let msg = format!("red/blue width slopes differ by {:.0}%", 100.0 * mismatch);
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let g0 = (slope * settings.kappa_tot / 4.0).sqrt();
    let sigma_g0 = g0 * cov[(1, 1)].sqrt() / (2.0 * slope);
    let floor = if settings.backaction_floor { (settings.kappa_tot / (4.0 * settings.omega_m)).powi(2) } else { 0.0 };

    // normalised areas: Y = nΓ_m + Γ_o (N_cav + tech)
    let mut normalized = Vec::with_capacity(good.len());
    let (mut g_opt, mut n_cav, mut yv, mut sv) = (vec![], vec![], vec![], vec![]);
    for p in &good {
        let go = slope * p.n_cav;
        if go <= 0.0 {
            continue;
        }
        let (a, w) = (p.fit.area, TWO_PI * p.fit.width);
        let (sa, sw) = (usable_sigma(p.fit.sigma_area, a), TWO_PI * usable_sigma(p.fit.sigma_width, p.fit.width));
        let (val, da, dw, known) = match p.scheme {
            Scheme::RedDetuned => (a * w / go, w / go, a / go, floor),
            Scheme::BlueDetuned => ((a / go - 1.0) * w - go, w / go, a / go - 1.0, 0.0),
        };
        let sigma = ((da * sa).powi(2) + (dw * sw).powi(2)).sqrt();
        normalized.push(NormalizedArea { scheme: p.scheme, n_cav: p.n_cav, value: val, sigma });
        g_opt.push(go);
        n_cav.push(p.n_cav);
        yv.push(val - go * (settings.n_cav_noise + known));
        sv.push(sigma);
    }

    let (mut tech_coeff, mut sigma_tech, mut exponent, mut thermal) = (0.0, 0.0, f64::NAN, f64::NAN);
    if yv.len() >= 3 {
        if settings.fit_technical_heating {
            let chi = |a: f64| tech_linear(&g_opt, &n_cav, &yv, &sv, settings.n_ref, a).map(|r| r.2).unwrap_or(f64::INFINITY);
            let (lo, hi) = settings.exponent_range;
            let grid = 36;
            let mut best = lo;
            let mut best_chi = f64::INFINITY;
            for i in 0..=grid {
                let a = lo + (hi - lo) * i as f64 / grid as f64;
                let c = chi(a);
                if c < best_chi {
                    best_chi = c;
                    best = a;
                }
            }
            let step = (hi - lo) / grid as f64;
            let (mut l, mut r) = ((best - step).max(lo), (best + step).min(hi));
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let m1 = r - phi * (r - l);
                let m2 = l + phi * (r - l);
                if chi(m1) < chi(m2) {
                    r = m2;
                } else {
                    l = m1;
                }
            }
            exponent = 0.5 * (l + r);
            let (p, cov, _) = tech_linear(&g_opt, &n_cav, &yv, &sv, settings.n_ref, exponent)
                .ok_or_else(|| Error::Numerical("technical-heating fit is singular".into()))?;
            thermal = p[0];
            tech_coeff = p[1];
            sigma_tech = cov[(1, 1)].sqrt();
        } else {
            let w: f64 = sv.iter().map(|s| 1.0 / (s * s)).sum();
            thermal = yv.iter().zip(&sv).map(|(y, s)| y / (s * s)).sum::<f64>() / w;
        }
    } else {
        warnings.push("too few normalised areas for a technical-heating fit".into());
    }

    Ok(CalibrationResult {
        g0_est: g0,
        sigma_g0,
        gamma_m_est: gamma_m,
        sigma_gamma_m: cov[(0, 0)].sqrt(),
        gamma_opt_per_photon: slope,
        slope_red,
        slope_blue,
        single_scheme,
        tech_coeff,
        sigma_tech_coeff: sigma_tech,
        tech_exponent: if exponent.is_finite() { exponent } else { 2.0 },
        thermal_term: thermal,
        n_ref: settings.n_ref,
        n_cav_noise: settings.n_cav_noise,
        backaction_floor: floor,
        kappa_tot: settings.kappa_tot,
        normalized_areas: normalized,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{hz, to_hz};
    use crate::optomech::{effective_population, gamma_opt, sideband_area_width, NoiseBudget, PumpConfig};

    fn exact_point(sys: &SystemParams, noise: &NoiseBudget, scheme: Scheme, n_cav: f64, n_th: f64) -> SweepPoint {
        let pump = PumpConfig::from_n_cav(scheme, n_cav, sys).unwrap();
        let go = gamma_opt(n_cav, sys);
        let n_eff = effective_population(n_th, noise, &pump, sys.gamma_m_floor, go).unwrap();
        let (area, width) = sideband_area_width(&pump, n_eff, sys.gamma_m_floor, go).unwrap();
        let mut fit = FitResult::failed();
        fit.area = area;
        fit.width = to_hz(width);
        fit.center = 15.1e6;
        fit.background = 100.0;
        fit.sigma_area = 1e-4 * area;
        fit.sigma_width = 1e-4 * to_hz(width);
        fit.converged = true;
        SweepPoint { scheme, n_cav, fit }
    }

    fn sweep(noise: &NoiseBudget, schemes: &[Scheme]) -> Vec<SweepPoint> {
        let sys = SystemParams::aalto_drum();
        let mut pts = Vec::new();
        for &s in schemes {
            for n in [50.0, 100.0, 200.0, 400.0, 800.0] {
                pts.push(exact_point(&sys, noise, s, n, 137.5));
            }
        }
        pts
    }

    #[test]
    fn exact_sweep_recovers_constants() {
        let sys = SystemParams::aalto_drum();
        let noise = NoiseBudget::aalto_drum(&sys);
        let pts = sweep(&noise, &[Scheme::RedDetuned, Scheme::BlueDetuned]);
        let cal = calibrate_power_sweep(&pts, &CalibrationSettings::for_system(&sys)).unwrap();
        assert!((cal.g0_est / sys.g0 - 1.0).abs() < 1e-9);
        assert!((cal.gamma_m_est / sys.gamma_m_floor - 1.0).abs() < 1e-9);
        assert!((cal.tech_coeff - 1.0).abs() < 1e-4, "{}", cal.tech_coeff);
        assert!((cal.tech_exponent - 2.0).abs() < 1e-3, "{}", cal.tech_exponent);
        assert!((cal.thermal_term / (137.5 * sys.gamma_m_floor) - 1.0).abs() < 1e-6);
        assert!(!cal.single_scheme);
        let (r, b) = (cal.slope_red.unwrap(), cal.slope_blue.unwrap());
        assert!((r / b - 1.0).abs() < 1e-9);
        assert!(cal.warnings.is_empty(), "{:?}", cal.warnings);
    }

    #[test]
    fn zero_heating_gives_zero_coefficient() {
        let sys = SystemParams::aalto_drum();
        let noise = NoiseBudget { tech_heating_coeff: 0.0, ..NoiseBudget::aalto_drum(&sys) };
        let pts = sweep(&noise, &[Scheme::RedDetuned, Scheme::BlueDetuned]);
        let cal = calibrate_power_sweep(&pts, &CalibrationSettings::for_system(&sys)).unwrap();
        assert!(cal.tech_coeff.abs() < 2.0 * cal.sigma_tech_coeff.max(1e-6), "{} ± {}", cal.tech_coeff, cal.sigma_tech_coeff);
    }

    #[test]
    fn red_only_sweep_is_flagged_but_usable() {
        let sys = SystemParams::aalto_drum();
        let noise = NoiseBudget::aalto_drum(&sys);
        let pts = sweep(&noise, &[Scheme::RedDetuned]);
        let cal = calibrate_power_sweep(&pts, &CalibrationSettings::for_system(&sys)).unwrap();
        assert!(cal.single_scheme);
        assert!((cal.g0_est / hz(230.0) - 1.0).abs() < 1e-9);
        assert!((cal.gamma_m_est / hz(420.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_powers_is_a_config_error() {
        let sys = SystemParams::aalto_drum();
        let noise = NoiseBudget::aalto_drum(&sys);
        let pts: Vec<_> = sweep(&noise, &[Scheme::RedDetuned]).into_iter().take(2).collect();
        assert!(matches!(calibrate_power_sweep(&pts, &CalibrationSettings::for_system(&sys)), Err(Error::Config(_))));
    }

    #[test]
    fn slope_mismatch_warns() {
        let sys = SystemParams::aalto_drum();
        let noise = NoiseBudget::aalto_drum(&sys);
        let mut pts = sweep(&noise, &[Scheme::RedDetuned, Scheme::BlueDetuned]);
        for p in pts.iter_mut().filter(|p| p.scheme == Scheme::RedDetuned) {
            p.fit.width = 420.0 + 1.5 * (p.fit.width - 420.0);
        }
        let cal = calibrate_power_sweep(&pts, &CalibrationSettings::for_system(&sys)).unwrap();
        assert!(cal.warnings.iter().any(|w| w.contains("slopes differ")));
    }
}
