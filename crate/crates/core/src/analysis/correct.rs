//! Back-action correction and the frames-to-populations pipeline.

use rayon::prelude::*;

use super::average::{window_frames, SlidingAverager};
use super::calibrate::CalibrationResult;
use super::fit::{fit_lorentzian_with, FitOptions, FitResult};
use crate::constants::{HBAR, K_B, TWO_PI};
use crate::error::{Error, Result};
use crate::optomech::Scheme;
use crate::spectral::SpectrumFrame;

/// Which intrinsic damping enters the gain correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DampingSource {
    /// Γ_m from the calibration sweep.
    #[default]
    Calibrated,
    /// Γ_m = measured width ∓ Γ_opt, per window.
    MeasuredWidth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correction {
    /// Area over Γ_opt with the zero-point quantum removed for blue.
    pub n_raw: f64,
    pub n_corrected: f64,
    pub sigma_n: f64,
    /// Mode temperature, defined only for positive populations.
    pub t_mode: Option<f64>,
}

/// Inverts the sideband relations for the thermal population.
pub fn correct_backaction(
    fit: &FitResult,
    calib: &CalibrationResult,
    scheme: Scheme,
    n_cav: f64,
    damping: DampingSource,
    omega_m: f64,
) -> Result<Correction> {
    let go = calib.gamma_opt(n_cav);
    let sign = scheme.damping_sign();
    let (gm, sigma_gm) = match damping {
        DampingSource::Calibrated => (calib.gamma_m_est, calib.sigma_gamma_m),
        DampingSource::MeasuredWidth => (TWO_PI * fit.width - sign * go, TWO_PI * fit.sigma_width),
    };
    if scheme == Scheme::BlueDetuned && go >= gm {
        return Err(Error::SelfOscillation { gamma_m: gm, gamma_opt: go });
    }
    if !(gm > 0.0) {
        return Err(Error::Numerical(format!("intrinsic damping {gm:.3e} rad/s is not positive")));
    }
    if !(go > 0.0) {
        return Err(Error::Domain("zero drive: the area carries no population information".into()));
    }
    let ratio = fit.area / go;
    let n_raw = match scheme {
        Scheme::RedDetuned => ratio,
        Scheme::BlueDetuned => ratio - 1.0,
    };
    let noise = calib.noise_photons(scheme, n_cav);
    let n_eff = n_raw;
    let total = gm + sign * go;
    let n = (n_eff * total - noise * go) / gm;
    // ∂n/∂A and ∂n/∂Γ_m
    let dn_da = total / (go * gm);
    let dn_dg = (n_eff - n) / gm;
    let sigma_n = ((dn_da * fit.sigma_area).powi(2) + (dn_dg * sigma_gm).powi(2)).sqrt();
    Ok(Correction { n_raw, n_corrected: n, sigma_n, t_mode: mode_temperature(n, omega_m) })
}

/// ħω/(k_B ln(1 + 1/n)) for n > 0.
pub fn mode_temperature(n: f64, omega_m: f64) -> Option<f64> {
    (n > 0.0 && n.is_finite()).then(|| HBAR * omega_m / (K_B * (1.0 / n).ln_1p()))
}

pub const FLAG_NOT_CONVERGED: u32 = 1;
pub const FLAG_NEGATIVE: u32 = 2;
pub const FLAG_CORRECTION_FAILED: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub fit: FitResult,
    pub n_raw: f64,
    pub n_corrected: f64,
    pub sigma_n: f64,
    pub t_mode: Option<f64>,
    pub flags: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// Sliding-average window, s.
    pub window: f64,
    pub fit: FitOptions,
    pub damping: DampingSource,
    /// Emit every `stride`-th window (1 = every frame).
    pub stride: usize,
    /// Windows fitted per parallel batch.
    pub batch: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { window: 1200.0, fit: FitOptions::default(), damping: DampingSource::Calibrated, stride: 1, batch: 512 }
    }
}

fn record_for(frame: &SpectrumFrame, calib: &CalibrationResult, opts: &PipelineOptions, omega_m: f64) -> TimeSeriesRecord {
    let fit = fit_lorentzian_with(frame, &opts.fit);
    let mut flags = if fit.converged { 0 } else { FLAG_NOT_CONVERGED };
    let corr = correct_backaction(&fit, calib, frame.meta.scheme, frame.meta.n_cav, opts.damping, omega_m);
    let (n_raw, n_corrected, sigma_n, t_mode) = match corr {
        Ok(c) => (c.n_raw, c.n_corrected, c.sigma_n, c.t_mode),
        Err(_) => {
            flags |= FLAG_CORRECTION_FAILED;
            (f64::NAN, f64::NAN, f64::NAN, None)
        }
    };
    if n_corrected < 0.0 {
        flags |= FLAG_NEGATIVE;
    }
    TimeSeriesRecord { t: frame.t, fit, n_raw, n_corrected, sigma_n, t_mode, flags }
}

/// Sliding average, per-window fit and back-action correction over a frame
/// stream. Windows are fitted in parallel batches; output order follows time.
pub fn analyze_frames<I>(frames: I, frame_dt: f64, calib: &CalibrationResult, omega_m: f64, opts: &PipelineOptions) -> Result<Vec<TimeSeriesRecord>>
where
    I: IntoIterator<Item = Result<SpectrumFrame>>,
{
    let len = window_frames(opts.window, frame_dt)?;
    let stride = opts.stride.max(1);
    let mut avg = SlidingAverager::new(len);
    let mut pending: Vec<SpectrumFrame> = Vec::with_capacity(opts.batch);
    let mut out = Vec::new();
    let mut seen = 0usize;
    let mut emitted = 0usize;
    let flush = |pending: &mut Vec<SpectrumFrame>, out: &mut Vec<TimeSeriesRecord>| {
        let recs: Vec<TimeSeriesRecord> = pending.par_iter().map(|f| record_for(f, calib, opts, omega_m)).collect();
        out.extend(recs);
        pending.clear();
    };
    for f in frames {
        seen += 1;
        if let Some(a) = avg.push(f?)? {
            if emitted.is_multiple_of(stride) {
                pending.push(a);
            }
            emitted += 1;
            if pending.len() >= opts.batch.max(1) {
                flush(&mut pending, &mut out);
            }
        }
    }
    if seen < len {
        return Err(Error::Domain(format!("window of {len} frames exceeds the acquisition of {seen} frames")));
    }
    flush(&mut pending, &mut out);
    Ok(out)
}

/// Mean and standard error of the corrected population, using
/// N_eff = duration / t_c independent samples when `t_c` is given.
pub fn population_summary(records: &[TimeSeriesRecord], t_c: Option<f64>) -> (f64, f64, f64) {
    let v: Vec<f64> = records.iter().filter(|r| r.flags & (FLAG_NOT_CONVERGED | FLAG_CORRECTION_FAILED) == 0).map(|r| r.n_corrected).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0).max(1.0)).sqrt();
    let n_eff = match (t_c, records.first(), records.last()) {
        (Some(tc), Some(a), Some(b)) if b.t > a.t => ((b.t - a.t) / tc).clamp(1.0, v.len() as f64),
        _ => v.len() as f64,
    };
    (m, sd, sd / n_eff.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz;
    use crate::optomech::{effective_population, gamma_opt, sideband_area_width, NoiseBudget, PumpConfig, SystemParams};

    fn calib(sys: &SystemParams) -> CalibrationResult {
        CalibrationResult::from_known(sys, sys.gamma_m_floor, 1.0, 2.0, 300.0, 0.0, true)
    }

    #[test]
    fn pure_zero_point_stokes_gives_zero() {
        let sys = SystemParams::aalto_drum();
        let c = CalibrationResult::from_known(&sys, sys.gamma_m_floor, 0.0, 2.0, 300.0, 0.0, false);
        let go = c.gamma_opt(1e-6);
        let mut fit = FitResult::failed();
        fit.area = go;
        fit.sigma_area = 0.0;
        let r = correct_backaction(&fit, &c, Scheme::BlueDetuned, 1e-6, DampingSource::Calibrated, sys.omega_m0).unwrap();
        assert!(r.n_corrected.abs() < 1e-6, "{}", r.n_corrected);
        assert!(r.t_mode.is_none() || r.n_corrected > 0.0);
    }

    #[test]
    fn inverts_forward_model_for_both_schemes() {
        let sys = SystemParams::aalto_drum();
        let noise = NoiseBudget::aalto_drum(&sys);
        let c = calib(&sys);
        for scheme in [Scheme::RedDetuned, Scheme::BlueDetuned] {
            for &n_th in &[0.0, 0.31, 2.0, 137.5] {
                for &n_cav in &[300.0, 600.0] {
                    let pump = PumpConfig::from_n_cav(scheme, n_cav, &sys).unwrap();
                    let go = gamma_opt(n_cav, &sys);
                    let n_eff = effective_population(n_th, &noise, &pump, sys.gamma_m_floor, go).unwrap();
                    let (area, width) = sideband_area_width(&pump, n_eff, sys.gamma_m_floor, go).unwrap();
                    let mut fit = FitResult::failed();
                    fit.area = area;
                    fit.width = width / TWO_PI;
                    fit.sigma_area = 0.0;
                    fit.sigma_width = 0.0;
                    for d in [DampingSource::Calibrated, DampingSource::MeasuredWidth] {
                        let r = correct_backaction(&fit, &c, scheme, n_cav, d, sys.omega_m0).unwrap();
                        assert!((r.n_corrected - n_th).abs() < 1e-9 * (1.0 + n_th), "{scheme} {n_th} {n_cav}: {}", r.n_corrected);
                    }
                }
            }
        }
    }

    #[test]
    fn negative_population_is_kept() {
        let sys = SystemParams::aalto_drum();
        let c = calib(&sys);
        let mut fit = FitResult::failed();
        fit.area = 0.5 * c.gamma_opt(300.0);
        fit.sigma_area = 1.0;
        let r = correct_backaction(&fit, &c, Scheme::BlueDetuned, 300.0, DampingSource::Calibrated, sys.omega_m0).unwrap();
        assert!(r.n_corrected < 0.0);
        assert!(r.t_mode.is_none());
    }

    #[test]
    fn blue_beyond_threshold_errors() {
        let sys = SystemParams::aalto_drum();
        let c = calib(&sys);
        let fit = FitResult::failed();
        let r = correct_backaction(&fit, &c, Scheme::BlueDetuned, 1000.0, DampingSource::Calibrated, sys.omega_m0);
        assert!(matches!(r, Err(Error::SelfOscillation { .. })));
    }

    #[test]
    fn mode_temperature_inverts_bose() {
        let w = hz(15.1e6);
        let n = crate::optomech::bose_occupation(0.0123, w).unwrap();
        assert!((mode_temperature(n, w).unwrap() / 0.0123 - 1.0).abs() < 1e-12);
        assert!(mode_temperature(0.0, w).is_none());
        assert!(mode_temperature(-0.1, w).is_none());
    }
}
