use std::fmt::Write as _;
use std::path::Path;

use drumtherm_core::analysis::correct::{mode_temperature, population_summary, FLAG_CORRECTION_FAILED, FLAG_NEGATIVE, FLAG_NOT_CONVERGED};
use drumtherm_core::analysis::spectrum::fill_gaps;
use drumtherm_core::analysis::{
    allan_deviation, analyze_frames, deviation_table, fluctuation_spectrum, histogram_stats, CalibrationResult, PipelineOptions,
    TimeSeriesRecord,
};
use drumtherm_core::bath::mechanical_damping_mean;
use drumtherm_core::io::{read_calibration, write_atomic, ContainerReader, Table};
use drumtherm_core::optomech::bose_occupation;
use drumtherm_core::spectral::FrameMeta;
use drumtherm_core::{Error, Result};

use super::{ALLAN, DEVIATION, FRAMES, HISTOGRAM, MANIFEST, SPECTRUM, SUMMARY, TIMESERIES};
use crate::{load_config, out_dir, Common};

fn usable(r: &TimeSeriesRecord) -> bool {
    r.flags & (FLAG_NOT_CONVERGED | FLAG_CORRECTION_FAILED) == 0
}

fn population_series(records: &[TimeSeriesRecord]) -> Vec<f64> {
    records.iter().map(|r| if usable(r) { r.n_corrected } else { f64::NAN }).collect()
}

pub fn run(common: &Common, input: Option<&Path>, calibration: Option<&Path>) -> Result<()> {
    let input = match (input, &common.out) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(o)) => o.join(FRAMES),
        (None, None) => return Err(Error::Config("pass --input or --out".into())),
    };
    let beside = input.parent().map(|d| d.join(MANIFEST));
    let mut cfg = load_config(common, beside.as_deref())?;
    if cfg.out.is_none() {
        cfg.out = input.parent().map(Path::to_path_buf);
    }
    // the seed plays no part in the analysis
    let sc = cfg.clone().with_overrides(Some(cfg.seed.unwrap_or(0)), None, None)?.scenario()?;
    let spec = cfg.analysis()?;
    let out = out_dir(&cfg)?;
    let t0 = sc.schedule.at(0.0)?;
    let meta = FrameMeta { scheme: sc.pump.scheme, n_cav: sc.pump.n_cav, t_cryo: t0 };
    let calib = match calibration {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            read_calibration(&text)?
        }
        None => CalibrationResult::from_known(
            &sc.sys,
            mechanical_damping_mean(t0, &sc.sys, &sc.bath),
            sc.noise.tech_heating_coeff,
            sc.noise.tech_heating_exponent,
            cfg.tech_ref_photons()?,
            sc.noise.n_cav_noise,
            sc.noise.quantum_backaction_floor,
        ),
    };
    let pass = |window: f64, stride: usize| -> Result<Vec<TimeSeriesRecord>> {
        let reader = ContainerReader::open(&input, meta)?;
        let opts = PipelineOptions { window, stride, damping: spec.damping, ..PipelineOptions::default() };
        analyze_frames(reader, sc.frame_dt, &calib, sc.sys.omega_m0, &opts)
    };

    let records = pass(spec.window, spec.stride)?;
    let dt = spec.stride as f64 * sc.frame_dt;
    let mut ts = Table::new([
        "t", "area", "sigma_area", "width_hz", "sigma_width_hz", "center_hz", "sigma_center_hz", "background", "sigma_background", "converged",
        "n_raw", "n_corrected", "sigma_n", "t_mode", "flags",
    ]);
    ts.comment(format!("window {} s, stride {}, damping {:?}; flags: 1 fit not converged, 2 negative, 4 correction failed", spec.window, spec.stride, spec.damping));
    for r in &records {
        let f = &r.fit;
        ts.push(vec![
            r.t,
            f.area,
            f.sigma_area,
            f.width,
            f.sigma_width,
            f.center,
            f.sigma_center,
            f.background,
            f.sigma_background,
            f64::from(u8::from(f.converged)),
            r.n_raw,
            r.n_corrected,
            r.sigma_n,
            r.t_mode.unwrap_or(f64::NAN),
            f64::from(r.flags),
        ]);
    }
    ts.write(&out.join(TIMESERIES))?;

    let mut summary = String::from("[summary]\n");
    let mut put = |k: &str, v: f64| {
        if v.is_finite() {
            let _ = writeln!(summary, "{k} = {v:?}");
        }
    };
    let (mean, sd, se) = population_summary(&records, Some(sc.bath.t_c));
    put("windows", records.len() as f64);
    put("failed_windows", records.iter().filter(|r| !usable(r)).count() as f64);
    put("negative_windows", records.iter().filter(|r| r.flags & FLAG_NEGATIVE != 0).count() as f64);
    put("window", spec.window);
    put("series_dt", dt);
    put("n_mean", mean);
    put("n_sd", sd);
    put("n_se", se);
    if sc.schedule.is_constant() {
        put("temperature", t0);
        put("n_expected", bose_occupation(t0, sc.sys.omega_m0)?);
    }
    put("t_mode_of_mean", mode_temperature(mean, sc.sys.omega_m0).unwrap_or(f64::NAN));
    if mean > 0.0 {
        put("sigma_ph_prefactor", sd / mean.sqrt());
    }

    let series = fill_gaps(&population_series(&records));
    if let Some(series) = &series {
        match fluctuation_spectrum(series, dt, spec.detrend, spec.window) {
            Ok(fs) => {
                let mut t = Table::new(["f_hz", "psd"]);
                t.comment("one-sided power spectral density of the corrected population, 1/Hz");
                for (f, p) in fs.spectrum.f.iter().zip(&fs.spectrum.psd) {
                    t.push(vec![*f, *p]);
                }
                t.write(&out.join(SPECTRUM))?;
                if let Some(ou) = fs.ou {
                    put("ou_sigma", ou.sigma);
                    put("ou_t_c", ou.t_c);
                    put("ou_nu", ou.nu);
                    put("ou_converged", f64::from(u8::from(ou.converged)));
                }
            }
            Err(e) => log::warn!("fluctuation spectrum skipped: {e}"),
        }
        match histogram_stats(series) {
            Ok(h) => {
                let mut t = Table::new(["lo", "hi", "count", "gaussian"]);
                let norm = |x: f64| {
                    if h.fit_sigma > 0.0 {
                        h.fit_amplitude * (-0.5 * ((x - h.fit_mean) / h.fit_sigma).powi(2)).exp()
                    } else {
                        f64::NAN
                    }
                };
                for (i, c) in h.counts.iter().enumerate() {
                    let (lo, hi) = (h.edges[i], h.edges[i + 1]);
                    t.push(vec![lo, hi, *c as f64, norm(0.5 * (lo + hi))]);
                }
                t.write(&out.join(HISTOGRAM))?;
                put("hist_mean", h.fit_mean);
                put("hist_sigma", h.fit_sigma);
                put("hist_degenerate", f64::from(u8::from(h.degenerate)));
            }
            Err(e) => log::warn!("histogram skipped: {e}"),
        }
        let mut t = Table::new(["tau", "non_overlapping", "overlapping", "windowed_std", "window"]);
        for &tau in &spec.allan_taus {
            match allan_deviation(series, dt, tau, spec.allan_window) {
                Ok(a) => t.push(vec![a.tau, a.non_overlapping, a.overlapping, a.windowed_std, a.window]),
                Err(e) => log::warn!("Allan deviation at tau = {tau} s skipped: {e}"),
            }
        }
        t.write(&out.join(ALLAN))?;
    }

    let mut columns: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for &w in &spec.deviation_windows {
        let stride = ((w / sc.frame_dt / 4.0).round() as usize).max(1);
        let recs = if w == spec.window && stride == spec.stride { records.clone() } else { pass(w, stride)? };
        if let Some(s) = fill_gaps(&population_series(&recs)) {
            columns.push((w, s, stride as f64 * sc.frame_dt));
        }
    }
    let cols: Vec<(f64, &[f64], f64)> = columns.iter().map(|(w, s, d)| (*w, s.as_slice(), *d)).collect();
    let dev = deviation_table(&cols, &spec.acquisition_lengths)?;
    let mut t = Table::new(["acquisition_length", "window", "sigma"]);
    t.comment("window 0 rows hold the straight-line extrapolation to zero window");
    for (i, &l) in dev.acquisition_lengths.iter().enumerate() {
        for (j, &w) in dev.windows.iter().enumerate() {
            t.push(vec![l, w, dev.sigma[i][j]]);
        }
        t.push(vec![l, 0.0, dev.zero_window[i]]);
    }
    t.write(&out.join(DEVIATION))?;
    if let Some(i) = dev.zero_window.iter().rposition(|v| v.is_finite()) {
        put("deviation_length", dev.acquisition_lengths[i]);
        put("zero_window_sigma", dev.zero_window[i]);
    }
    write_atomic(&out.join(SUMMARY), summary.as_bytes())?;
    println!("{} windows; mean corrected population {mean:.4} +- {se:.4} (sd {sd:.4})", records.len());
    Ok(())
}
