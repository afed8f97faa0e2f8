//! Named parameter bundles in configuration units (Hz, s, K, W).

use crate::io::config::Value;

pub const PRESET_NAMES: [&str; 1] = ["aalto-drum"];

/// Keys and values of one physical section of a preset, or `None` if the
/// preset or section is unknown.
pub fn preset_section(preset: &str, section: &str) -> Option<Vec<(&'static str, Value)>> {
    use Value::{Bool, Num};
    if preset != "aalto-drum" {
        return None;
    }
    let v = match section {
        "system" => vec![
            ("cavity_frequency", Num(5.7e9)),
            ("mechanical_frequency", Num(15.1e6)),
            ("kappa_tot", Num(500e3)),
            ("kappa_ext", Num(240e3)),
            ("g0", Num(230.0)),
            ("gamma_m_floor", Num(420.0)),
            ("duffing_beta", Num(20.0)),
            ("mass", Num(5e-14)),
        ],
        "bath" => vec![
            ("tls_log_slope", Num(250.0)),
            ("damping_linear_slope", Num(2000.0)),
            ("damping_knee", Num(0.1)),
            ("t_c", Num(5.0 * 3600.0)),
            ("sigma_ph_prefactor", Num(0.5)),
            ("sigma_f_amp", Num(5.0 / 0.1f64.sqrt())),
            ("sigma_f_exponent", Num(0.5)),
            ("sigma_gamma_amp", Num(5.0 / 5e-4f64.sqrt() / 200.0)),
            ("sigma_gamma_exponent", Num(0.5)),
            ("walk_ref_window", Num(10.0 * 3600.0)),
            ("walk_correlation", Num(0.0)),
        ],
        "noise" => vec![
            ("n_cav_noise", Num(0.0)),
            ("tech_heating_coeff", Num(1.0)),
            ("tech_heating_exponent", Num(2.0)),
            ("tech_heating_ref_photons", Num(300.0)),
            ("amplifier_background", Num(100.0)),
            ("quantum_backaction_floor", Bool(true)),
        ],
        "material" => vec![
            ("v_s", Num(6700.0)),
            ("theta_d", Num(468.0)),
            ("rho", Num(2700.0)),
            ("c_p_coeff", Num(0.41)),
            ("k_bulk_coeff", Num(23.4)),
            ("g_eph", Num(0.4e9)),
        ],
        "thermal" => vec![
            ("e_p", Num(100e-9)),
            ("r1", Num(7e-6)),
            ("r2", Num(10e-6)),
            ("kapitza_coeff", Num(0.1)),
            ("heat_leak_specific", Num(0.1e-9)),
        ],
        _ => return None,
    };
    Some(v)
}
