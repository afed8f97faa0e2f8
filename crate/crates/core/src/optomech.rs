//! Closed-form single-tone optomechanics in the resolved-sideband limit.
//!
//! All rates and frequencies are angular (rad/s). Conversion to Hz happens
//! only at the file and command-line boundary.

use crate::constants::{HBAR, K_B, TWO_PI};
use crate::error::{domain, Error, Result};

/// Static device and cavity constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity resonance, rad/s.
    pub omega_c: f64,
    /// High-temperature mechanical frequency, rad/s.
    pub omega_m0: f64,
    /// Total cavity damping, rad/s.
    pub kappa_tot: f64,
    /// External (port) coupling, rad/s.
    pub kappa_ext: f64,
    /// Single-photon optomechanical coupling, rad/s.
    pub g0: f64,
    /// Low-temperature (clamping-limited) mechanical damping, rad/s.
    pub gamma_m_floor: f64,
    /// Duffing coefficient, Hz/nm².
    pub duffing_beta: f64,
    /// Effective mass, kg.
    pub mass: f64,
}

impl SystemParams {
    /// The aluminium drum of the reference experiment.
    pub fn aalto_drum() -> Self {
        SystemParams {
            omega_c: TWO_PI * 5.7e9,
            omega_m0: TWO_PI * 15.1e6,
            kappa_tot: TWO_PI * 500e3,
            kappa_ext: TWO_PI * 240e3,
            g0: TWO_PI * 230.0,
            gamma_m_floor: TWO_PI * 420.0,
            duffing_beta: 20.0,
            mass: 5e-14,
        }
    }

    /// Checks the type invariants. Returns whether the resolved-sideband
    /// regime (`omega_m0 > 10 kappa_tot`) holds; a `false` is logged as a warning.
    pub fn validate(&self) -> Result<bool> {
        let rates = [
            ("omega_c", self.omega_c),
            ("omega_m0", self.omega_m0),
            ("kappa_tot", self.kappa_tot),
            ("kappa_ext", self.kappa_ext),
            ("g0", self.g0),
            ("gamma_m_floor", self.gamma_m_floor),
            ("duffing_beta", self.duffing_beta),
            ("mass", self.mass),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.kappa_ext > self.kappa_tot {
            return Err(Error::Config(format!(
                "kappa_ext ({}) exceeds kappa_tot ({})",
                self.kappa_ext, self.kappa_tot
            )));
        }
        let resolved = self.omega_m0 > 10.0 * self.kappa_tot;
        if !resolved {
            log::warn!(
                "omega_m0/kappa_tot = {:.2}: outside the resolved-sideband regime the closed-form expressions are approximate",
                self.omega_m0 / self.kappa_tot
            );
        }
        Ok(resolved)
    }

    /// ħω_m/k_B for the nominal mechanical frequency, K.
    pub fn quantum_temperature(&self) -> f64 {
        HBAR * self.omega_m0 / K_B
    }
}

/// Which sideband the pump addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Pump at ω_c − ω_m; the anti-Stokes sideband (∝ n) is measured.
    RedDetuned,
    /// Pump at ω_c + ω_m; the Stokes sideband (∝ n + 1) is measured.
    BlueDetuned,
}

impl Scheme {
    /// +1 for red (damping), −1 for blue (anti-damping).
    pub fn damping_sign(self) -> f64 {
        match self {
            Scheme::RedDetuned => 1.0,
            Scheme::BlueDetuned => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::RedDetuned => "red",
            Scheme::BlueDetuned => "blue",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "red" | "red-detuned" | "reddetuned" => Ok(Scheme::RedDetuned),
            "blue" | "blue-detuned" | "bluedetuned" => Ok(Scheme::BlueDetuned),
            other => Err(Error::Config(format!("unknown pump scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single detuned pump tone.
///
/// `n_cav` and `p_in` are kept consistent by the constructors; the
/// sideband-resolution ratio κ_tot/(4ω_m) is cached for the red-scheme
/// quantum back-action floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpConfig {
    pub scheme: Scheme,
    pub n_cav: f64,
    pub p_in: f64,
    /// Offset δ of the pump from ω_c ± ω_m0, rad/s.
    pub detuning_error: f64,
    sideband_resolution: f64,
}

impl PumpConfig {
    pub fn from_n_cav(scheme: Scheme, n_cav: f64, sys: &SystemParams) -> Result<Self> {
        if !(n_cav >= 0.0 && n_cav.is_finite()) {
            return domain(format!("n_cav must be >= 0, got {n_cav}"));
        }
        Ok(PumpConfig {
            scheme,
            n_cav,
            p_in: power_from_n_cav(n_cav, sys)?,
            detuning_error: 0.0,
            sideband_resolution: sys.kappa_tot / (4.0 * sys.omega_m0),
        })
    }

    pub fn from_power(scheme: Scheme, p_in: f64, sys: &SystemParams) -> Result<Self> {
        let n_cav = n_cav_from_power(p_in, sys)?;
        Ok(PumpConfig {
            scheme,
            n_cav,
            p_in,
            detuning_error: 0.0,
            sideband_resolution: sys.kappa_tot / (4.0 * sys.omega_m0),
        })
    }

    pub fn with_detuning(mut self, detuning_error: f64) -> Self {
        self.detuning_error = detuning_error;
        self
    }

    /// Pump frequency, rad/s.
    pub fn pump_frequency(&self, sys: &SystemParams) -> f64 {
        sys.omega_c - self.scheme.damping_sign() * sys.omega_m0 + self.detuning_error
    }

    /// (κ_tot / 4ω_m)², the residual red-scheme back-action population.
    pub fn backaction_floor(&self) -> f64 {
        self.sideband_resolution * self.sideband_resolution
    }
}

/// Noise photons acting on the mechanics through the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    /// Thermal cavity population N_cav.
    pub n_cav_noise: f64,
    /// Out-of-equilibrium photons at the reference power.
    pub tech_heating_coeff: f64,
    /// Exponent `a` of the technical-heating power law. No measured value
    /// exists; the preset uses 2.0.
    pub tech_heating_exponent: f64,
    /// Power at which `tech_heating_coeff` applies, W.
    pub tech_heating_ref_power: f64,
    /// Detection noise floor referenced to the amplifier input, photons
    /// (flux density photons/s/Hz in a frame).
    pub amplifier_background: f64,
    /// Include the (κ_tot/4ω_m)² red-scheme floor in N_noise.
    pub quantum_backaction_floor: bool,
}

impl NoiseBudget {
    /// One out-of-equilibrium photon at the 300-photon drive, a = 2,
    /// 100-photon amplifier background.
    pub fn aalto_drum(sys: &SystemParams) -> Self {
        NoiseBudget {
            n_cav_noise: 0.0,
            tech_heating_coeff: 1.0,
            tech_heating_exponent: 2.0,
            tech_heating_ref_power: power_from_n_cav(300.0, sys).expect("positive"),
            amplifier_background: 100.0,
            quantum_backaction_floor: true,
        }
    }

    /// A budget with no cavity noise, no technical heating and the given background.
    pub fn quiet(amplifier_background: f64) -> Self {
        NoiseBudget {
            n_cav_noise: 0.0,
            tech_heating_coeff: 0.0,
            tech_heating_exponent: 2.0,
            tech_heating_ref_power: 1.0,
            amplifier_background,
            quantum_backaction_floor: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_cav_noise", self.n_cav_noise),
            ("tech_heating_coeff", self.tech_heating_coeff),
            ("tech_heating_exponent", self.tech_heating_exponent),
            ("amplifier_background", self.amplifier_background),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.tech_heating_ref_power > 0.0) {
            return Err(Error::Config("tech_heating_ref_power must be > 0".into()));
        }
        Ok(())
    }

    /// N_noise entering the effective population: cavity photons plus
    /// technical heating, plus the zero-point "+1" for blue or the optional
    /// back-action floor for red.
    pub fn noise_photons(&self, pump: &PumpConfig) -> f64 {
        let cavity = self.n_cav_noise
            + technical_heating_photons(pump.p_in, self, self.tech_heating_ref_power)
                .unwrap_or(0.0);
        match pump.scheme {
            Scheme::BlueDetuned => cavity + 1.0,
            Scheme::RedDetuned if self.quantum_backaction_floor => cavity + pump.backaction_floor(),
            Scheme::RedDetuned => cavity,
        }
    }
}

/// Drive photons stored in the cavity for a sideband-detuned pump.
pub fn n_cav_from_power(p_in: f64, sys: &SystemParams) -> Result<f64> {
    if !(p_in >= 0.0 && p_in.is_finite()) {
        return domain(format!("input power must be >= 0, got {p_in}"));
    }
    Ok(p_in * sys.kappa_ext / (HBAR * sys.omega_c * sys.omega_m0 * sys.omega_m0))
}

/// Inverse of [`n_cav_from_power`].
pub fn power_from_n_cav(n_cav: f64, sys: &SystemParams) -> Result<f64> {
    if !(n_cav >= 0.0 && n_cav.is_finite()) {
        return domain(format!("n_cav must be >= 0, got {n_cav}"));
    }
    Ok(n_cav * HBAR * sys.omega_c * sys.omega_m0 * sys.omega_m0 / sys.kappa_ext)
}

/// Optomechanical damping rate Γ_opt = 4 g₀² n_cav / κ_tot.
pub fn gamma_opt(n_cav: f64, sys: &SystemParams) -> f64 {
    4.0 * sys.g0 * sys.g0 * n_cav / sys.kappa_tot
}

/// Bose-Einstein occupation of a mode at angular frequency `omega`.
pub fn bose_occupation(temperature: f64, omega: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return domain(format!("temperature must be > 0, got {temperature}"));
    }
    if !(omega > 0.0) {
        return domain(format!("frequency must be > 0, got {omega}"));
    }
    Ok(1.0 / (HBAR * omega / (K_B * temperature)).exp_m1())
}

/// Temperature whose Bose occupation at `omega` is `n`.
pub fn temperature_from_occupation(n: f64, omega: f64) -> Result<f64> {
    if !(n > 0.0) {
        return domain(format!("occupation must be > 0 to define a temperature, got {n}"));
    }
    Ok(HBAR * omega / (K_B * (1.0 / n).ln_1p()))
}

fn check_below_threshold(scheme: Scheme, gamma_m: f64, gamma_opt: f64) -> Result<f64> {
    let width = gamma_m + scheme.damping_sign() * gamma_opt;
    if width <= 0.0 {
        return Err(Error::SelfOscillation { gamma_m, gamma_opt });
    }
    Ok(width)
}

/// Effective mode population under measurement back-action:
/// `(n_th Γ_m + N_noise Γ_opt) / (Γ_m ± Γ_opt)`.
pub fn effective_population(
    n_th: f64,
    noise: &NoiseBudget,
    pump: &PumpConfig,
    gamma_m: f64,
    gamma_opt: f64,
) -> Result<f64> {
    let width = check_below_threshold(pump.scheme, gamma_m, gamma_opt)?;
    Ok((n_th * gamma_m + noise.noise_photons(pump) * gamma_opt) / width)
}

/// Sideband area (photons/s) and full width (rad/s).
pub fn sideband_area_width(
    pump: &PumpConfig,
    n_eff: f64,
    gamma_m: f64,
    gamma_opt: f64,
) -> Result<(f64, f64)> {
    let width = check_below_threshold(pump.scheme, gamma_m, gamma_opt)?;
    let area = match pump.scheme {
        Scheme::RedDetuned => gamma_opt * n_eff,
        Scheme::BlueDetuned => gamma_opt * (n_eff + 1.0),
    };
    Ok((area, width))
}

/// Effective temperatures defined from a sideband area in the small-drive limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTemperatures {
    /// Population inferred from the area.
    pub n: f64,
    /// (n + 1) ħω_m / k_B.
    pub blue: f64,
    /// n ħω_m / k_B.
    pub red: f64,
}

impl EffectiveTemperatures {
    pub fn from_population(n: f64, sys: &SystemParams) -> Self {
        let tq = sys.quantum_temperature();
        EffectiveTemperatures { n, blue: (n + 1.0) * tq, red: n * tq }
    }

    pub fn for_scheme(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::RedDetuned => self.red,
            Scheme::BlueDetuned => self.blue,
        }
    }
}

/// Inverts the small-drive area relations to a population and reports both
/// effective temperatures.
pub fn effective_temperatures(
    area: f64,
    gamma_opt: f64,
    sys: &SystemParams,
    scheme: Scheme,
) -> Result<EffectiveTemperatures> {
    if !(area >= 0.0) {
        return domain(format!("area must be >= 0, got {area}"));
    }
    if !(gamma_opt > 0.0) {
        return domain("gamma_opt must be > 0 to normalise an area");
    }
    let ratio = area / gamma_opt;
    let n = match scheme {
        Scheme::RedDetuned => ratio,
        Scheme::BlueDetuned => ratio - 1.0,
    };
    Ok(EffectiveTemperatures::from_population(n, sys))
}

/// High-temperature limit of the anti-Stokes/Stokes area ratio at finite drive,
/// (Γ_m − Γ_opt)/(Γ_m + Γ_opt).
pub fn asymmetry_bound(gamma_m: f64, gamma_opt: f64) -> Result<f64> {
    check_below_threshold(Scheme::BlueDetuned, gamma_m, gamma_opt)?;
    Ok((gamma_m - gamma_opt) / (gamma_m + gamma_opt))
}

/// Anti-Stokes over Stokes area ratio at temperature `temperature` using the
/// low-temperature damping `sys.gamma_m_floor`.
pub fn asymmetry_ratio(temperature: f64, n_cav: f64, sys: &SystemParams) -> Result<f64> {
    asymmetry_ratio_with_damping(temperature, n_cav, sys, sys.gamma_m_floor)
}

pub fn asymmetry_ratio_with_damping(
    temperature: f64,
    n_cav: f64,
    sys: &SystemParams,
    gamma_m: f64,
) -> Result<f64> {
    let n = bose_occupation(temperature, sys.omega_m0)?;
    let bound = asymmetry_bound(gamma_m, gamma_opt(n_cav, sys))?;
    Ok(n / (n + 1.0) * bound)
}

/// Drive photons at which the blue-detuned linewidth vanishes.
pub fn self_oscillation_threshold(sys: &SystemParams, gamma_m: f64) -> Result<f64> {
    if !(gamma_m > 0.0) {
        return domain(format!("gamma_m must be > 0, got {gamma_m}"));
    }
    Ok(gamma_m * sys.kappa_tot / (4.0 * sys.g0 * sys.g0))
}

/// Optical-spring frequency shift (rad/s) from the two-Lorentzian
/// expression with Δ = ω_pump − ω_c.
pub fn optical_spring_shift(pump: &PumpConfig, sys: &SystemParams) -> f64 {
    let g2 = sys.g0 * sys.g0 * pump.n_cav;
    let delta = pump.pump_frequency(sys) - sys.omega_c;
    let q = sys.kappa_tot * sys.kappa_tot / 4.0;
    let plus = delta + sys.omega_m0;
    let minus = delta - sys.omega_m0;
    g2 * (plus / (plus * plus + q) + minus / (minus * minus + q))
}

/// Out-of-equilibrium cavity photons `coeff (p_in / p_ref)^a`.
pub fn technical_heating_photons(p_in: f64, noise: &NoiseBudget, p_ref: f64) -> Result<f64> {
    if !(p_in >= 0.0) {
        return domain(format!("input power must be >= 0, got {p_in}"));
    }
    if !(p_ref > 0.0) {
        return domain(format!("reference power must be > 0, got {p_ref}"));
    }
    if p_in == 0.0 {
        return Ok(0.0);
    }
    Ok(noise.tech_heating_coeff * (p_in / p_ref).powf(noise.tech_heating_exponent))
}

/// Motion amplitude (nm) implied by a Duffing frequency shift (Hz).
pub fn duffing_amplitude(freq_shift: f64, sys: &SystemParams) -> Result<f64> {
    let ratio = freq_shift / sys.duffing_beta;
    if ratio < 0.0 || !ratio.is_finite() {
        return domain(format!(
            "frequency shift {freq_shift} Hz and Duffing coefficient {} Hz/nm^2 differ in sign",
            sys.duffing_beta
        ));
    }
    Ok(ratio.sqrt())
}
