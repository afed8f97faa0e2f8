//! Text form of a calibration result. Rates are written in Hz.

use std::fmt::Write as _;

use super::config::{parse_num, Document};
use crate::analysis::CalibrationResult;
use crate::constants::{hz, to_hz};
use crate::error::{Error, Result};

const HZ_KEYS: [&str; 9] =
    ["g0", "sigma_g0", "gamma_m", "sigma_gamma_m", "gamma_opt_per_photon", "slope_red", "slope_blue", "thermal_term", "kappa_tot"];

pub fn write_calibration(c: &CalibrationResult) -> String {
    let mut s = String::from("[calibration]\n");
    let mut put = |k: &str, v: f64| {
        if v.is_finite() {
            let v = if HZ_KEYS.contains(&k) { to_hz(v) } else { v };
            let _ = writeln!(s, "{k} = {v:?}");
        }
    };
    put("g0", c.g0_est);
    put("sigma_g0", c.sigma_g0);
    put("gamma_m", c.gamma_m_est);
    put("sigma_gamma_m", c.sigma_gamma_m);
    put("gamma_opt_per_photon", c.gamma_opt_per_photon);
    if let Some(v) = c.slope_red {
        put("slope_red", v);
    }
    if let Some(v) = c.slope_blue {
        put("slope_blue", v);
    }
    put("tech_coeff", c.tech_coeff);
    put("sigma_tech_coeff", c.sigma_tech_coeff);
    put("tech_exponent", c.tech_exponent);
    put("thermal_term", c.thermal_term);
    put("n_ref", c.n_ref);
    put("n_cav_noise", c.n_cav_noise);
    put("backaction_floor", c.backaction_floor);
    put("kappa_tot", c.kappa_tot);
    let _ = writeln!(s, "single_scheme = {}", c.single_scheme);
    for (i, w) in c.warnings.iter().enumerate() {
        let _ = writeln!(s, "warning_{i} = {}", w.replace('\n', " "));
    }
    s
}

pub fn read_calibration(text: &str) -> Result<CalibrationResult> {
    let doc = Document::parse(text)?;
    let b = doc.block("calibration").ok_or_else(|| Error::Config("calibration file lacks a [calibration] section".into()))?;
    let num = |k: &str| -> Result<Option<f64>> {
        match b.get(k) {
            Some(e) => {
                let v = parse_num(&e.value, &format!("line {} (calibration.{k})", e.line))?;
                Ok(Some(if HZ_KEYS.contains(&k) { hz(v) } else { v }))
            }
            None => Ok(None),
        }
    };
    let req = |k: &str| -> Result<f64> { num(k)?.ok_or_else(|| Error::Config(format!("calibration file lacks `{k}`"))) };
    let mut warnings: Vec<(usize, String)> = b
        .entries
        .iter()
        .filter_map(|e| e.key.strip_prefix("warning_").and_then(|i| i.parse().ok()).map(|i| (i, e.value.clone())))
        .collect();
    warnings.sort();
    Ok(CalibrationResult {
        g0_est: req("g0")?,
        sigma_g0: num("sigma_g0")?.unwrap_or(0.0),
        gamma_m_est: req("gamma_m")?,
        sigma_gamma_m: num("sigma_gamma_m")?.unwrap_or(0.0),
        gamma_opt_per_photon: req("gamma_opt_per_photon")?,
        slope_red: num("slope_red")?,
        slope_blue: num("slope_blue")?,
        single_scheme: b.get("single_scheme").is_some_and(|e| e.value == "true"),
        tech_coeff: num("tech_coeff")?.unwrap_or(0.0),
        sigma_tech_coeff: num("sigma_tech_coeff")?.unwrap_or(0.0),
        tech_exponent: num("tech_exponent")?.unwrap_or(2.0),
        thermal_term: num("thermal_term")?.unwrap_or(f64::NAN),
        n_ref: req("n_ref")?,
        n_cav_noise: num("n_cav_noise")?.unwrap_or(0.0),
        backaction_floor: num("backaction_floor")?.unwrap_or(0.0),
        kappa_tot: req("kappa_tot")?,
        normalized_areas: Vec::new(),
        warnings: warnings.into_iter().map(|w| w.1).collect(),
    })
}
