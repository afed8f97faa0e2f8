use drumtherm_core::io::{write_atomic, Table};
use drumtherm_core::thermal::budget;
use drumtherm_core::Result;

use super::{THERMAL, THERMAL_MANIFEST};
use crate::{load_config, out_dir, Common};

pub fn run(common: &Common) -> Result<()> {
    let cfg = load_config(common, None)?;
    let mat = cfg.material()?;
    let stack = cfg.stack()?;
    let spec = cfg.budget()?;
    let out = out_dir(&cfg)?;
    let rows = budget(&spec.temperatures, &spec.electron_powers, &stack, &mat)?;
    let mut cols: Vec<String> = [
        "T", "c_p", "k_conf", "K_torus", "K_kapitza", "kapitza_over_torus", "K_series", "C_membrane", "tau_th", "leak_power", "T1",
        "T1_naive", "gradient_iterations", "lambda_dom",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(spec.electron_powers.iter().map(|p| format!("T_e@{p:e}W")));
    let mut t = Table::new(cols);
    t.comment("SI units: K, J/(m^3 K), W/(m K), W/K, J/K, s, W, m");
    for r in &rows {
        let mut v = vec![
            r.t,
            r.c_p,
            r.k_conf,
            r.k_torus,
            r.k_kapitza,
            r.kapitza_ratio,
            r.k_series,
            r.heat_capacity,
            r.tau,
            r.leak_power,
            r.gradient.t1,
            r.gradient.t1_naive,
            f64::from(r.gradient.iterations),
            r.lambda_dom,
        ];
        v.extend(r.electron.iter().map(|e| e.1));
        t.push(v);
    }
    t.write(&out.join(THERMAL))?;
    write_atomic(&out.join(THERMAL_MANIFEST), cfg.manifest(&["material", "thermal", "budget"]).as_bytes())?;
    println!("{:>10} {:>11} {:>11} {:>8} {:>10} {:>12}  T_e", "T [K]", "K_torus", "C", "tau [s]", "K_kap/K_t", "T1-T [K]");
    for r in &rows {
        let te: Vec<String> = r.electron.iter().map(|(p, te)| format!("{te:.4e} K @ {p:e} W")).collect();
        println!(
            "{:>10.3e} {:>11.4e} {:>11.4e} {:>8.3e} {:>10.1} {:>12.4e}  {}",
            r.t,
            r.k_torus,
            r.heat_capacity,
            r.tau,
            r.kapitza_ratio,
            r.gradient.t1 - r.t,
            te.join(", ")
        );
    }
    Ok(())
}
