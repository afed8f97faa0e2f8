use std::fmt::Write as _;
use std::path::Path;

use drumtherm_core::constants::to_hz;
use drumtherm_core::io::config::{parse_num, Document};
use drumtherm_core::io::{read_calibration, scan_container, write_atomic, Table};
use drumtherm_core::optomech::bose_occupation;
use drumtherm_core::spectral::FrameMeta;
use drumtherm_core::{Error, Result, Scheme};

use super::{CALIBRATION, DEVIATION, FRAMES, HISTOGRAM, MANIFEST, REPORT, SUMMARY, THERMAL, TIMESERIES};
use crate::{load_config, out_dir, Common};

fn read_summary(path: &Path) -> Result<Vec<(String, f64)>> {
    let doc = Document::parse(&std::fs::read_to_string(path)?)?;
    let b = doc.block("summary").ok_or_else(|| Error::Data { offset: 0, message: "summary lacks [summary]".into() })?;
    b.entries.iter().map(|e| Ok((e.key.clone(), parse_num(&e.value, &e.key)?))).collect()
}

fn missing(doc: &mut String, what: &str) {
    let _ = writeln!(doc, "missing: {what}\n");
}

pub fn run(common: &Common, input: Option<&Path>) -> Result<()> {
    let dir = match (input, &common.out) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(Error::Config("pass --input or --out".into())),
    };
    let manifest = dir.join(MANIFEST);
    let mut cfg = load_config(common, Some(&manifest))?;
    if cfg.out.is_none() {
        cfg.out = Some(dir.clone());
    }
    let out = out_dir(&cfg)?;
    let mut doc = String::from("# Run report\n\n");
    let _ = writeln!(doc, "Run directory: `{}`\n", dir.display());

    let _ = writeln!(doc, "## Acquisition\n");
    let sc = if manifest.exists() || common.config.is_some() {
        cfg.clone().with_overrides(Some(cfg.seed.unwrap_or(0)), None, None)?.scenario().ok()
    } else {
        None
    };
    match &sc {
        Some(sc) => {
            let _ = writeln!(
                doc,
                "- scheme {}, {} drive photons, {} s at {} s cadence, {} averages per frame",
                sc.pump.scheme, sc.pump.n_cav, sc.duration, sc.frame_dt, sc.n_averages
            );
            if sc.schedule.is_constant() {
                let t = sc.schedule.at(0.0)?;
                let _ = writeln!(doc, "- cryostat {t} K, n(T) = {:.4}", bose_occupation(t, sc.sys.omega_m0)?);
            }
        }
        None => missing(&mut doc, "manifest.cfg (scenario parameters)"),
    }
    let frames = dir.join(FRAMES);
    if frames.exists() {
        let meta = FrameMeta { scheme: sc.as_ref().map_or(Scheme::RedDetuned, |s| s.pump.scheme), n_cav: 0.0, t_cryo: 0.0 };
        let (grid, n, first, last) = scan_container(&frames, meta)?;
        let _ = writeln!(
            doc,
            "- container: {n} frames from t = {first} s to {last} s, {} bins from {:.1} Hz in {:.4} Hz steps\n",
            grid.n_bins, grid.f_start, grid.f_step
        );
    } else {
        missing(&mut doc, FRAMES);
    }

    let _ = writeln!(doc, "## Calibration\n");
    let cal = dir.join(CALIBRATION);
    if cal.exists() {
        let c = read_calibration(&std::fs::read_to_string(&cal)?)?;
        let _ = writeln!(doc, "- g0 = 2pi x {:.2} +- {:.2} Hz", to_hz(c.g0_est), to_hz(c.sigma_g0));
        if let Ok(sys) = cfg.system() {
            let _ = writeln!(doc, "- g0 relative to configured: {:+.2} %", 100.0 * (c.g0_est / sys.g0 - 1.0));
        }
        let _ = writeln!(doc, "- Gamma_m = 2pi x {:.2} +- {:.2} Hz", to_hz(c.gamma_m_est), to_hz(c.sigma_gamma_m));
        let _ = writeln!(doc, "- technical heating {:.3} +- {:.3} photons at {} photons, exponent {:.2}", c.tech_coeff, c.sigma_tech_coeff, c.n_ref, c.tech_exponent);
        for w in &c.warnings {
            let _ = writeln!(doc, "- warning: {w}");
        }
        doc.push('\n');
    } else {
        missing(&mut doc, CALIBRATION);
    }

    let _ = writeln!(doc, "## Population and fluctuations\n");
    let sum = dir.join(SUMMARY);
    if sum.exists() {
        let s = read_summary(&sum)?;
        let get = |k: &str| s.iter().find(|e| e.0 == k).map(|e| e.1);
        for (k, v) in &s {
            let _ = writeln!(doc, "- {k} = {v}");
        }
        if let (Some(m), Some(e), Some(x)) = (get("n_mean"), get("n_se"), get("n_expected")) {
            let _ = writeln!(doc, "- deviation from n(T): {:+.2} standard errors", (m - x) / e);
        }
        if let (Some(tc), Some(sc)) = (get("ou_t_c"), &sc) {
            let _ = writeln!(doc, "- fitted t_c / configured t_c = {:.3}", tc / sc.bath.t_c);
        }
        doc.push('\n');
    } else {
        missing(&mut doc, SUMMARY);
    }

    let ts = dir.join(TIMESERIES);
    if ts.exists() {
        let t = Table::read(&ts)?;
        let (tt, n, s) = (t.column("t"), t.column("n_corrected"), t.column("sigma_n"));
        if let (Some(tt), Some(n), Some(s)) = (tt, n, s) {
            let mut p = Table::new(["t_hours", "n_corrected", "sigma_n"]);
            for i in 0..tt.len() {
                p.push(vec![tt[i] / 3600.0, n[i], s[i]]);
            }
            p.write(&out.join("plot_population.tsv"))?;
        }
    } else {
        missing(&mut doc, TIMESERIES);
    }
    let hist = dir.join(HISTOGRAM);
    if hist.exists() {
        let t = Table::read(&hist)?;
        let mut p = Table::new(["center", "count", "gaussian"]);
        for r in &t.rows {
            p.push(vec![0.5 * (r[0] + r[1]), r[2], r[3]]);
        }
        p.write(&out.join("plot_histogram.tsv"))?;
    } else {
        missing(&mut doc, HISTOGRAM);
    }
    let dev = dir.join(DEVIATION);
    if dev.exists() {
        let t = Table::read(&dev)?;
        let mut p = Table::new(["acquisition_hours", "window", "sigma"]);
        for r in &t.rows {
            p.push(vec![r[0] / 3600.0, r[1], r[2]]);
        }
        p.write(&out.join("plot_deviation.tsv"))?;
    } else {
        missing(&mut doc, DEVIATION);
    }

    let _ = writeln!(doc, "## Thermal budget\n");
    let th = dir.join(THERMAL);
    if th.exists() {
        let t = Table::read(&th)?;
        let _ = writeln!(doc, "| T [K] | tau_th [s] | K_kapitza/K_torus | T1 - T [K] |");
        let _ = writeln!(doc, "|---|---|---|---|");
        let c = |n: &str| t.column(n).unwrap_or_default();
        let (tk, tau, ratio, t1) = (c("T"), c("tau_th"), c("kapitza_over_torus"), c("T1"));
        for i in 0..tk.len().min(tau.len()).min(ratio.len()).min(t1.len()) {
            let _ = writeln!(doc, "| {:.3e} | {:.3e} | {:.1} | {:.3e} |", tk[i], tau[i], ratio[i], t1[i] - tk[i]);
        }
        for (j, name) in t.columns.iter().enumerate().filter(|(_, n)| n.starts_with("T_e@")) {
            if let Some(r) = t.rows.first() {
                let _ = writeln!(doc, "\n- {name} at T = {:.3e} K: {:.4e} K", r[0], r[j]);
            }
        }
        doc.push('\n');
    } else {
        missing(&mut doc, THERMAL);
    }
    write_atomic(&out.join(REPORT), doc.as_bytes())?;
    println!("wrote {}", out.join(REPORT).display());
    Ok(())
}
