//! Compositions of the simulator and the estimators used by the command
//! line and the acceptance suite.

use rayon::prelude::*;

use crate::analysis::{calibrate_power_sweep, fit_lorentzian, CalibrationResult, CalibrationSettings, SweepPoint};
use crate::bath::BathParams;
use crate::error::{Error, Result};
use crate::io::SweepSpec;
use crate::optomech::{NoiseBudget, PumpConfig, Scheme, SystemParams};
use crate::spectral::{run_scenario, Scenario, SpectrumFrame, TemperatureSchedule};

/// Seed of sweep point `i`, kept apart from the scenario seed itself.
pub fn sweep_point_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Sum of all frames of a scenario as one spectrum with the pooled average count.
pub fn integrate_scenario(sc: Scenario) -> Result<SpectrumFrame> {
    let mut run = run_scenario(sc)?;
    let mut acc = run.next().ok_or_else(|| Error::Config("scenario produces no frames".into()))??;
    let mut k = 1.0;
    for f in run {
        let f = f?;
        for (a, v) in acc.psd.iter_mut().zip(&f.psd) {
            *a += v;
        }
        acc.n_averages = acc.n_averages.saturating_add(f.n_averages);
        acc.t = f.t;
        k += 1.0;
    }
    for a in &mut acc.psd {
        *a /= k;
    }
    Ok(acc)
}

/// Simulates and fits every (scheme, drive) point of a sweep.
pub fn simulate_sweep(spec: &SweepSpec, sys: &SystemParams, bath: &BathParams, noise: &NoiseBudget, seed: u64) -> Result<Vec<SweepPoint>> {
    let bath = if spec.quiet_bath { bath.without_noise() } else { *bath };
    let jobs: Vec<(Scheme, f64)> = spec.schemes.iter().flat_map(|&s| spec.n_cav.iter().map(move |&n| (s, n))).collect();
    jobs.par_iter()
        .enumerate()
        .map(|(i, &(scheme, n_cav))| {
            let sc = Scenario {
                duration: spec.duration,
                frame_dt: spec.frame_dt,
                schedule: TemperatureSchedule::constant(spec.temperature),
                pump: PumpConfig::from_n_cav(scheme, n_cav, sys)?,
                sys: *sys,
                bath,
                noise: *noise,
                grid: None,
                n_averages: spec.n_averages,
                seed: sweep_point_seed(seed, i),
            };
            let frame = integrate_scenario(sc)?;
            Ok(SweepPoint { scheme, n_cav, fit: fit_lorentzian(&frame) })
        })
        .collect()
}

pub fn calibration_settings(spec: &SweepSpec, sys: &SystemParams, noise: &NoiseBudget) -> CalibrationSettings {
    CalibrationSettings {
        n_ref: spec.n_ref,
        n_cav_noise: noise.n_cav_noise,
        backaction_floor: noise.quantum_backaction_floor,
        fit_technical_heating: spec.fit_technical_heating,
        slope_tolerance: spec.slope_tolerance,
        exponent_range: match spec.tech_exponent {
            Some(a) => (a, a),
            None => CalibrationSettings::for_system(sys).exponent_range,
        },
        ..CalibrationSettings::for_system(sys)
    }
}

/// Simulated sweep followed by the calibration fit.
pub fn run_calibration(spec: &SweepSpec, sys: &SystemParams, bath: &BathParams, noise: &NoiseBudget, seed: u64) -> Result<(Vec<SweepPoint>, CalibrationResult)> {
    if spec.n_cav.len() < 3 {
        return Err(Error::Config(format!("the sweep has {} powers per scheme; at least 3 are required", spec.n_cav.len())));
    }
    let points = simulate_sweep(spec, sys, bath, noise, seed)?;
    let calib = calibrate_power_sweep(&points, &calibration_settings(spec, sys, noise))?;
    Ok((points, calib))
}
