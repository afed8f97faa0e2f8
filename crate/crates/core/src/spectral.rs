//! Forward measurement model: bath state to noisy sideband spectra.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::bath::{tls_frequency_shift, BathParams, BathProcess, BathState};
use crate::constants::to_hz;
use crate::error::{Error, Result};
use crate::optomech::{
    effective_population, gamma_opt, optical_spring_shift, sideband_area_width, NoiseBudget,
    PumpConfig, Scheme, SystemParams,
};

pub const MIN_BINS: usize = 64;
pub const DEFAULT_BINS: usize = 512;
pub const DEFAULT_AVERAGES: u32 = 10;

/// Uniform frequency grid on the mechanical-frequency axis, Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_bins: usize,
    pub f_start: f64,
    pub f_step: f64,
}

impl GridSpec {
    pub fn new(n_bins: usize, f_start: f64, f_step: f64) -> Result<Self> {
        if n_bins < MIN_BINS {
            return Err(Error::Config(format!("grid needs at least {MIN_BINS} bins, got {n_bins}")));
        }
        if !(f_step > 0.0 && f_step.is_finite() && f_start.is_finite()) {
            return Err(Error::Config(format!("invalid grid start {f_start} / step {f_step}")));
        }
        Ok(GridSpec { n_bins, f_start, f_step })
    }

    /// `n_bins` bins covering `center ± half_span`.
    pub fn centered(center: f64, half_span: f64, n_bins: usize) -> Result<Self> {
        let step = 2.0 * half_span / (n_bins as f64 - 1.0);
        GridSpec::new(n_bins, center - half_span, step)
    }

    /// 512 bins across ±20 floor linewidths around `center` (Hz).
    pub fn default_for(center: f64, sys: &SystemParams) -> Self {
        GridSpec::centered(center, 20.0 * to_hz(sys.gamma_m_floor), DEFAULT_BINS)
            .expect("preset grid is valid")
    }

    pub fn freq(&self, i: usize) -> f64 {
        self.f_start + i as f64 * self.f_step
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.freq(i)).collect()
    }

    pub fn center(&self) -> f64 {
        self.f_start + 0.5 * (self.n_bins as f64 - 1.0) * self.f_step
    }

    pub fn span(&self) -> f64 {
        (self.n_bins as f64 - 1.0) * self.f_step
    }
}

/// Acquisition context carried with each frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMeta {
    pub scheme: Scheme,
    pub n_cav: f64,
    pub t_cryo: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFrame {
    pub t: f64,
    pub grid: GridSpec,
    /// Photon flux density, photons/s/Hz.
    pub psd: Vec<f64>,
    pub n_averages: u32,
    pub meta: FrameMeta,
}

impl SpectrumFrame {
    pub fn f_grid(&self) -> Vec<f64> {
        self.grid.frequencies()
    }
}

/// Lorentzian of unit area, full width `fwhm`, evaluated at `f − center`.
#[inline]
pub fn lorentzian(detuning: f64, fwhm: f64) -> f64 {
    let h = 0.5 * fwhm;
    h / (std::f64::consts::PI * (detuning * detuning + h * h))
}

/// Sideband observables in Hz-based units: area (photons/s), FWHM (Hz), centre (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakModel {
    pub area: f64,
    pub width: f64,
    pub center: f64,
    pub background: f64,
}

impl PeakModel {
    pub fn eval(&self, f: f64) -> f64 {
        self.background + self.area * lorentzian(f - self.center, self.width)
    }
}

/// Sideband parameters implied by a bath state and pump.
pub fn peak_model(
    state: &BathState,
    pump: &PumpConfig,
    sys: &SystemParams,
    noise: &NoiseBudget,
) -> Result<PeakModel> {
    let g_opt = gamma_opt(pump.n_cav, sys);
    let n_eff = effective_population(state.n_inst, noise, pump, state.gamma_m_inst, g_opt)?;
    let (area, width) = sideband_area_width(pump, n_eff, state.gamma_m_inst, g_opt)?;
    Ok(PeakModel {
        area,
        width: to_hz(width),
        center: to_hz(state.omega_m_inst + optical_spring_shift(pump, sys)),
        background: noise.amplifier_background,
    })
}

/// Mean PSD per bin: background plus the sideband Lorentzian.
pub fn frame_expectation(
    state: &BathState,
    pump: &PumpConfig,
    sys: &SystemParams,
    noise: &NoiseBudget,
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    let m = peak_model(state, pump, sys, noise)?;
    Ok((0..grid.n_bins).map(|i| m.eval(grid.freq(i))).collect())
}

/// Draws an averaged periodogram: each bin is Gamma(shape = n_averages, mean = bin mean).
pub fn sample_frame<R: rand::Rng + ?Sized>(mean: &[f64], n_averages: u32, rng: &mut R) -> Result<Vec<f64>> {
    if n_averages == 0 {
        return Err(Error::Domain("n_averages must be >= 1".into()));
    }
    let k = n_averages as f64;
    mean.iter()
        .map(|&m| {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::Domain(format!("bin mean must be finite and >= 0, got {m}")));
            }
            if m == 0.0 {
                return Ok(0.0);
            }
            let g = Gamma::new(k, m / k).map_err(|e| Error::Numerical(e.to_string()))?;
            Ok(g.sample(rng))
        })
        .collect()
}

/// Piecewise-linear cryostat temperature versus time.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSchedule {
    points: Vec<(f64, f64)>,
    constant: bool,
}

impl TemperatureSchedule {
    pub fn constant(temperature: f64) -> Self {
        TemperatureSchedule { points: vec![(0.0, temperature)], constant: true }
    }

    /// Knots `(t, T)` with strictly increasing `t` and `T > 0`.
    pub fn piecewise(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("temperature schedule is empty".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Config("schedule times must be strictly increasing".into()));
        }
        if points.iter().any(|p| !(p.1 > 0.0)) {
            return Err(Error::Config("schedule temperatures must be > 0".into()));
        }
        Ok(TemperatureSchedule { points, constant: false })
    }

    /// Exponential approach from `t_start` to `t_end` with time constant
    /// `tau`, sampled every `step` seconds over `duration`.
    pub fn exponential_cooldown(t_start: f64, t_end: f64, tau: f64, duration: f64, step: f64) -> Result<Self> {
        let n = (duration / step).ceil() as usize;
        let pts = (0..=n)
            .map(|i| {
                let t = (i as f64 * step).min(duration);
                (t, t_end + (t_start - t_end) * (-t / tau).exp())
            })
            .collect::<Vec<_>>();
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            if dedup.last().is_none_or(|l| p.0 > l.0) {
                dedup.push(p);
            }
        }
        TemperatureSchedule::piecewise(dedup)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        self.constant || (self.points[0].0 <= t0 && self.points[self.points.len() - 1].0 >= t1)
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        if self.constant {
            return Ok(self.points[0].1);
        }
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if t < first.0 || t > last.0 {
            return Err(Error::Config(format!(
                "temperature schedule covers [{}, {}] s but t = {t} s was requested",
                first.0, last.0
            )));
        }
        let i = self.points.partition_point(|p| p.0 <= t);
        if i == self.points.len() {
            return Ok(last.1);
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        Ok(a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0))
    }
}

/// Everything needed to produce a frame stream.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub duration: f64,
    pub frame_dt: f64,
    pub schedule: TemperatureSchedule,
    pub pump: PumpConfig,
    pub sys: SystemParams,
    pub bath: BathParams,
    pub noise: NoiseBudget,
    /// `None` selects the default grid around the starting peak position.
    pub grid: Option<GridSpec>,
    pub n_averages: u32,
    pub seed: u64,
}

impl Scenario {
    pub fn n_frames(&self) -> usize {
        (self.duration / self.frame_dt + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frame_dt > 0.0 && self.duration >= self.frame_dt) {
            return Err(Error::Config(format!(
                "need duration ({}) >= frame_dt ({}) > 0",
                self.duration, self.frame_dt
            )));
        }
        if self.n_averages == 0 {
            return Err(Error::Config("n_averages must be >= 1".into()));
        }
        if !self.schedule.covers(0.0, self.duration) {
            return Err(Error::Config(format!(
                "temperature schedule does not cover [0, {}] s",
                self.duration
            )));
        }
        self.sys.validate()?;
        self.bath.validate()?;
        self.noise.validate()?;
        Ok(())
    }

    /// Grid in use: the explicit one, or the default centred on the starting peak.
    pub fn resolved_grid(&self) -> Result<GridSpec> {
        if let Some(g) = self.grid {
            return Ok(g);
        }
        let t0 = self.schedule.at(0.0)?;
        let center = to_hz(
            self.sys.omega_m0
                + tls_frequency_shift(t0, self.sys.omega_m0, &self.bath)?
                + optical_spring_shift(&self.pump, &self.sys),
        );
        Ok(GridSpec::default_for(center, &self.sys))
    }
}

/// Bath seed derived from the scenario seed; the frame sampler uses the seed directly.
pub fn bath_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Iterator over the frames of a scenario.
#[derive(Debug)]
pub struct ScenarioRun {
    sc: Scenario,
    grid: GridSpec,
    bath: BathProcess,
    k: usize,
    n_frames: usize,
    warned: bool,
}

impl ScenarioRun {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    fn next_frame(&mut self) -> Result<SpectrumFrame> {
        let t = (self.k + 1) as f64 * self.sc.frame_dt;
        let temp = self.sc.schedule.at(t)?;
        let mut state = self.bath.evolve(temp, self.sc.frame_dt)?;
        state.t = t;
        let model = peak_model(&state, &self.sc.pump, &self.sc.sys, &self.sc.noise)?;
        if !self.warned && (model.center - self.grid.center()).abs() > 0.25 * self.grid.span() {
            log::warn!(
                "sideband centre {:.1} Hz has drifted more than 25% of the span from the grid centre {:.1} Hz",
                model.center,
                self.grid.center()
            );
            self.warned = true;
        }
        let mean: Vec<f64> = (0..self.grid.n_bins).map(|i| model.eval(self.grid.freq(i))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.sc.seed);
        rng.set_stream(self.k as u64 + 1);
        let psd = sample_frame(&mean, self.sc.n_averages, &mut rng)?;
        self.k += 1;
        Ok(SpectrumFrame {
            t,
            grid: self.grid,
            psd,
            n_averages: self.sc.n_averages,
            meta: FrameMeta { scheme: self.sc.pump.scheme, n_cav: self.sc.pump.n_cav, t_cryo: temp },
        })
    }
}

impl Iterator for ScenarioRun {
    type Item = Result<SpectrumFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.k >= self.n_frames {
            return None;
        }
        let r = self.next_frame();
        if r.is_err() {
            self.k = self.n_frames;
        }
        Some(r)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.n_frames - self.k;
        (left, Some(left))
    }
}

/// Starts a scenario; frames are produced lazily and in time order.
pub fn run_scenario(sc: Scenario) -> Result<ScenarioRun> {
    sc.validate()?;
    let grid = sc.resolved_grid()?;
    let bath = BathProcess::new(sc.sys, BathParams { rng_seed: bath_seed(sc.seed), ..sc.bath })?;
    let n_frames = sc.n_frames();
    Ok(ScenarioRun { sc, grid, bath, k: 0, n_frames, warned: false })
}
