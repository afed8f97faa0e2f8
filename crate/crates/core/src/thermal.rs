//! Phonon thermal budget of the membrane, torus and substrate chain, and
//! electron-phonon decoupling. All quantities are SI except the Kapitza
//! coefficient, which is carried in W·cm⁻²·K⁻⁴ and converted where used.

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Prefactor of the dominant phonon wavelength λ = 2.23 ħ v_s / (k_B T).
pub const DOMINANT_WAVELENGTH_FACTOR: f64 = 2.23;
const CM2_TO_M2: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialProps {
    pub v_s: f64,
    pub theta_d: f64,
    pub rho: f64,
    /// c_p = c_p_coeff·T³, J·m⁻³·K⁻⁴.
    pub c_p_coeff: f64,
    /// Bulk conductivity k = k_bulk_coeff·T³, W·m⁻¹·K⁻⁴.
    pub k_bulk_coeff: f64,
    /// Electron-phonon coupling, W·K⁻⁵·m⁻³.
    pub g_eph: f64,
}

impl MaterialProps {
    pub fn aluminium() -> Self {
        Self { v_s: 6700.0, theta_d: 468.0, rho: 2700.0, c_p_coeff: 0.41, k_bulk_coeff: 23.4, g_eph: 0.4e9 }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v_s", self.v_s),
            ("theta_d", self.theta_d),
            ("rho", self.rho),
            ("c_p_coeff", self.c_p_coeff),
            ("k_bulk_coeff", self.k_bulk_coeff),
            ("g_eph", self.g_eph),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("material.{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn c_p(&self, t: f64) -> f64 {
        self.c_p_coeff * t.powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalStack {
    /// Membrane and torus thickness.
    pub e_p: f64,
    /// Suspended disk radius.
    pub r1: f64,
    /// Outer torus radius.
    pub r2: f64,
    /// W·cm⁻²·K⁻⁴.
    pub kapitza_coeff: f64,
    /// W/kg.
    pub heat_leak_specific: f64,
    /// Confined mean free path in the torus; the thickness when `None`.
    pub lambda_conf: Option<f64>,
    /// Overrides the ρ·V mass of the suspended disk.
    pub mass_override: Option<f64>,
}

impl ThermalStack {
    pub fn aalto_drum() -> Self {
        Self {
            e_p: 100e-9,
            r1: 7e-6,
            r2: 10e-6,
            kapitza_coeff: 0.1,
            heat_leak_specific: 0.1e-9,
            lambda_conf: None,
            mass_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_p > 0.0 && self.e_p.is_finite()) {
            return Err(Error::Config(format!("thermal.e_p must be > 0, got {}", self.e_p)));
        }
        if !(self.r1 > 0.0 && self.r2 > self.r1 && self.r2.is_finite()) {
            return Err(Error::Config(format!("thermal radii need r2 > r1 > 0, got r1 = {}, r2 = {}", self.r1, self.r2)));
        }
        if !(self.kapitza_coeff > 0.0 && self.kapitza_coeff.is_finite()) {
            return Err(Error::Config(format!("thermal.kapitza_coeff must be > 0, got {}", self.kapitza_coeff)));
        }
        if !(self.heat_leak_specific >= 0.0 && self.heat_leak_specific.is_finite()) {
            return Err(Error::Config(format!("thermal.heat_leak_specific must be >= 0, got {}", self.heat_leak_specific)));
        }
        if let Some(l) = self.lambda_conf {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("thermal.lambda_conf must be > 0, got {l}")));
            }
        }
        if let Some(m) = self.mass_override {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Config(format!("thermal.mass must be > 0, got {m}")));
            }
        }
        if self.r2 / self.r1 < 1.01 {
            log::warn!("r2/r1 = {:.4}: torus conductance diverges as r2 -> r1", self.r2 / self.r1);
        }
        Ok(())
    }

    pub fn lambda_conf(&self) -> f64 {
        self.lambda_conf.unwrap_or(self.e_p)
    }

    pub fn membrane_volume(&self) -> f64 {
        PI * self.r1 * self.r1 * self.e_p
    }

    /// Annulus area between r1 and r2, m².
    pub fn torus_area(&self) -> f64 {
        PI * (self.r2 * self.r2 - self.r1 * self.r1)
    }

    pub fn mass(&self, mat: &MaterialProps) -> f64 {
        self.mass_override.unwrap_or(mat.rho * self.membrane_volume())
    }

    pub fn leak_power(&self, mat: &MaterialProps) -> f64 {
        self.heat_leak_specific * self.mass(mat)
    }
}

fn warn_debye(t: f64, mat: &MaterialProps) {
    if t > mat.theta_d / 10.0 {
        log::warn!("T = {t} K is not small against theta_D = {} K; the T^3 law is outside its range", mat.theta_d);
    }
}

/// Low-temperature Debye heat capacity per volume from the sound velocity.
pub fn debye_cp(t: f64, mat: &MaterialProps) -> f64 {
    warn_debye(t, mat);
    2.0 * PI * PI / 5.0 * K_B.powi(4) / (HBAR.powi(3) * mat.v_s.powi(3)) * t.powi(3)
}

/// Bulk phonon mean free path Λ = 3k/(c_p v_s).
pub fn bulk_mfp(mat: &MaterialProps) -> f64 {
    3.0 * mat.k_bulk_coeff / (mat.c_p_coeff * mat.v_s)
}

/// Boundary-limited conductivity k = c_p Λ v_s / 3.
pub fn confined_conductivity(t: f64, lambda_conf: f64, mat: &MaterialProps) -> Result<f64> {
    if !(lambda_conf > 0.0) {
        return Err(Error::Domain(format!("confined mean free path must be > 0, got {lambda_conf}")));
    }
    warn_debye(t, mat);
    Ok(mat.c_p(t) * lambda_conf * mat.v_s / 3.0)
}

/// Radial 2D conductance of the torus, 2π e_p k / ln(r2/r1).
pub fn torus_conductance(t: f64, stack: &ThermalStack, mat: &MaterialProps) -> Result<f64> {
    if !(stack.r2 > stack.r1) {
        return Err(Error::Domain(format!("torus needs r2 > r1, got r1 = {}, r2 = {}", stack.r1, stack.r2)));
    }
    let k = confined_conductivity(t, stack.lambda_conf(), mat)?;
    Ok(2.0 * PI * stack.e_p * k / (stack.r2 / stack.r1).ln())
}

pub fn membrane_heat_capacity(t: f64, stack: &ThermalStack, mat: &MaterialProps) -> f64 {
    mat.c_p(t) * stack.membrane_volume()
}

/// τ = C/K; both scale as T³ so it is evaluated at 1 K.
pub fn thermalization_time(stack: &ThermalStack, mat: &MaterialProps) -> Result<f64> {
    Ok(membrane_heat_capacity(1.0, stack, mat) / torus_conductance(1.0, stack, mat)?)
}

/// Boundary conductance across the torus-substrate interface.
pub fn kapitza_conductance(t: f64, stack: &ThermalStack) -> f64 {
    stack.kapitza_coeff * t.powi(3) * stack.torus_area() / CM2_TO_M2
}

/// Torus and Kapitza conductances in series.
pub fn series_conductance(t: f64, stack: &ThermalStack, mat: &MaterialProps) -> Result<f64> {
    let kt = torus_conductance(t, stack, mat)?;
    let kk = kapitza_conductance(t, stack);
    Ok(1.0 / (1.0 / kt + 1.0 / kk))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    /// Membrane temperature with K at the midpoint temperature.
    pub t1: f64,
    /// T0 + P/K(T0).
    pub t1_naive: f64,
    pub iterations: u32,
}

const GRADIENT_TOL: f64 = 1e-9;

/// Solves T1 − T0 = P / K_torus((T0 + T1)/2).
pub fn temperature_gradient(t0: f64, p_heat: f64, stack: &ThermalStack, mat: &MaterialProps) -> Result<Gradient> {
    if !(p_heat >= 0.0 && p_heat.is_finite()) {
        return Err(Error::Domain(format!("heating power must be >= 0, got {p_heat}")));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::Domain(format!("base temperature must be > 0, got {t0}")));
    }
    let k1 = torus_conductance(1.0, stack, mat)?;
    let naive = t0 + p_heat / (k1 * t0.powi(3));
    if p_heat == 0.0 {
        return Ok(Gradient { t1: t0, t1_naive: t0, iterations: 0 });
    }
    // f(x) = (k1/8) x (x + 2 T0)³ − P with x = T1 − T0 is increasing and
    // convex, so Newton from above the root decreases monotonically onto it.
    let c = 8.0 * p_heat / k1;
    let mut x = (naive - t0).min(c.powf(0.25));
    for it in 1..=200 {
        let s = x + 2.0 * t0;
        let f = x * s.powi(3) - c;
        let df = s.powi(3) + 3.0 * x * s * s;
        let step = f / df;
        x -= step;
        if step.abs() <= GRADIENT_TOL {
            return Ok(Gradient { t1: t0 + x, t1_naive: naive, iterations: it });
        }
    }
    Err(Error::Numerical(format!("temperature gradient did not converge for T0 = {t0}, P = {p_heat}")))
}

/// T_e = (T_ph⁵ + P/(V g))^(1/5) with V the suspended-disk volume.
pub fn electron_temperature(p_e: f64, t_ph: f64, stack: &ThermalStack, mat: &MaterialProps) -> Result<f64> {
    if !(p_e >= 0.0 && p_e.is_finite()) {
        return Err(Error::Domain(format!("electron heating power must be >= 0, got {p_e}")));
    }
    if !(t_ph >= 0.0) {
        return Err(Error::Domain(format!("phonon temperature must be >= 0, got {t_ph}")));
    }
    Ok((t_ph.powi(5) + p_e / (stack.membrane_volume() * mat.g_eph)).powf(0.2))
}

pub fn dominant_wavelength(t: f64, mat: &MaterialProps) -> f64 {
    DOMINANT_WAVELENGTH_FACTOR * HBAR * mat.v_s / (K_B * t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetRow {
    pub t: f64,
    pub c_p: f64,
    pub k_conf: f64,
    pub k_torus: f64,
    pub k_kapitza: f64,
    pub kapitza_ratio: f64,
    pub k_series: f64,
    pub heat_capacity: f64,
    pub tau: f64,
    pub leak_power: f64,
    pub gradient: Gradient,
    pub lambda_dom: f64,
    /// (power, electron temperature) for each requested electron heating power.
    pub electron: Vec<(f64, f64)>,
}

pub const DEFAULT_GRID: [f64; 4] = [0.5e-3, 1e-3, 10e-3, 100e-3];
pub const DEFAULT_ELECTRON_POWERS: [f64; 2] = [1e-15, 1e-18];

/// Thermal budget over a temperature grid.
pub fn budget(temps: &[f64], electron_powers: &[f64], stack: &ThermalStack, mat: &MaterialProps) -> Result<Vec<BudgetRow>> {
    mat.validate()?;
    stack.validate()?;
    let tau = thermalization_time(stack, mat)?;
    let leak = stack.leak_power(mat);
    temps
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("grid temperature must be > 0, got {t}")));
            }
            let k_torus = torus_conductance(t, stack, mat)?;
            let k_kapitza = kapitza_conductance(t, stack);
            let electron = electron_powers
                .iter()
                .map(|&p| electron_temperature(p, t, stack, mat).map(|te| (p, te)))
                .collect::<Result<Vec<_>>>()?;
            Ok(BudgetRow {
                t,
                c_p: debye_cp(t, mat),
                k_conf: confined_conductivity(t, stack.lambda_conf(), mat)?,
                k_torus,
                k_kapitza,
                kapitza_ratio: k_kapitza / k_torus,
                k_series: 1.0 / (1.0 / k_torus + 1.0 / k_kapitza),
                heat_capacity: membrane_heat_capacity(t, stack, mat),
                tau,
                leak_power: leak,
                gradient: temperature_gradient(t, leak, stack, mat)?,
                lambda_dom: dominant_wavelength(t, mat),
                electron,
            })
        })
        .collect()
}
