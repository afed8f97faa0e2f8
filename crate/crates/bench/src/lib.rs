//! Fixtures shared by the benchmarks.

use drumtherm_core::spectral::run_scenario;
use drumtherm_core::{BathParams, NoiseBudget, PumpConfig, Scenario, Scheme, SpectrumFrame, SystemParams, TemperatureSchedule};

/// Preset drum at `t` kelvin, red pump at 300 photons, 1-s frames.
pub fn scenario(t: f64, duration: f64, seed: u64) -> Scenario {
    let sys = SystemParams::aalto_drum();
    Scenario {
        duration,
        frame_dt: 1.0,
        schedule: TemperatureSchedule::constant(t),
        pump: PumpConfig::from_n_cav(Scheme::RedDetuned, 300.0, &sys).expect("below threshold"),
        sys,
        bath: BathParams::aalto_drum(),
        noise: NoiseBudget::aalto_drum(&sys),
        grid: None,
        n_averages: 10,
        seed,
    }
}

pub fn frames(t: f64, n: usize, seed: u64) -> Vec<SpectrumFrame> {
    run_scenario(scenario(t, n as f64, seed))
        .expect("valid preset")
        .collect::<Result<_, _>>()
        .expect("frames")
}

/// A 20-min average at 10 mK.
pub fn window_frame() -> SpectrumFrame {
    let fs = frames(0.01, 1200, 7);
    let mut acc = fs[0].clone();
    for f in &fs[1..] {
        for (a, v) in acc.psd.iter_mut().zip(&f.psd) {
            *a += v;
        }
    }
    for a in &mut acc.psd {
        *a /= fs.len() as f64;
    }
    acc.n_averages = 10 * fs.len() as u32;
    acc
}
