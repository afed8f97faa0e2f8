use drumtherm_core::constants::to_hz;
use drumtherm_core::io::{write_atomic, write_calibration, Table};
use drumtherm_core::workflow::run_calibration;
use drumtherm_core::{Result, Scheme};

use super::{CALIBRATION, CALIBRATION_MANIFEST, CALIBRATION_POINTS};
use crate::{load_config, out_dir, Common};

fn scheme_code(s: Scheme) -> f64 {
    match s {
        Scheme::RedDetuned => 0.0,
        Scheme::BlueDetuned => 1.0,
    }
}

pub fn run(common: &Common) -> Result<()> {
    let cfg = load_config(common, None)?;
    let spec = cfg.sweep()?;
    let seed = cfg.require_seed()?;
    let sys = cfg.system()?;
    let bath = cfg.bath()?;
    let noise = cfg.noise(&sys)?;
    let out = out_dir(&cfg)?;
    let (points, calib) = run_calibration(&spec, &sys, &bath, &noise, seed)?;

    let mut t = Table::new([
        "scheme", "n_cav", "area", "sigma_area", "width_hz", "sigma_width_hz", "center_hz", "background", "converged", "normalized_area",
        "sigma_normalized_area",
    ]);
    t.comment("scheme: 0 = red-detuned, 1 = blue-detuned; normalized area in rad/s");
    for p in &points {
        let na = calib.normalized_areas.iter().find(|a| a.scheme == p.scheme && a.n_cav == p.n_cav);
        t.push(vec![
            scheme_code(p.scheme),
            p.n_cav,
            p.fit.area,
            p.fit.sigma_area,
            p.fit.width,
            p.fit.sigma_width,
            p.fit.center,
            p.fit.background,
            f64::from(u8::from(p.fit.converged)),
            na.map_or(f64::NAN, |a| a.value),
            na.map_or(f64::NAN, |a| a.sigma),
        ]);
    }
    t.write(&out.join(CALIBRATION_POINTS))?;
    write_atomic(&out.join(CALIBRATION), write_calibration(&calib).as_bytes())?;
    write_atomic(&out.join(CALIBRATION_MANIFEST), cfg.manifest(&["system", "bath", "noise", "sweep"]).as_bytes())?;
    for w in &calib.warnings {
        log::warn!("{w}");
    }
    println!(
        "g0 = 2pi x {:.2} +- {:.2} Hz, Gamma_m = 2pi x {:.2} +- {:.2} Hz, technical heating {:.3} +- {:.3} photons (a = {:.2}){}",
        to_hz(calib.g0_est),
        to_hz(calib.sigma_g0),
        to_hz(calib.gamma_m_est),
        to_hz(calib.sigma_gamma_m),
        calib.tech_coeff,
        calib.sigma_tech_coeff,
        calib.tech_exponent,
        if calib.single_scheme { " [single-scheme]" } else { "" }
    );
    Ok(())
}
