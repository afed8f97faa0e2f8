//! Fluctuation spectra of parameter time series and the OU model fit.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_SPECTRUM_POINTS: usize = 1000;

/// One-sided power spectral density on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub f: Vec<f64>,
    pub psd: Vec<f64>,
}

fn prepared(series: &[f64], detrend: bool) -> Vec<f64> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    if !detrend {
        return series.iter().map(|x| x - mean).collect();
    }
    let tm = 0.5 * (n - 1.0);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, x) in series.iter().enumerate() {
        let d = i as f64 - tm;
        sxy += d * (x - mean);
        sxx += d * d;
    }
    let slope = sxy / sxx;
    series.iter().enumerate().map(|(i, x)| x - mean - slope * (i as f64 - tm)).collect()
}

/// Direct periodogram, one-sided, bins k/(N dt) for k = 0..=N/2.
pub fn periodogram(series: &[f64], dt: f64, detrend: bool) -> Spectrum {
    let n = series.len();
    let x = prepared(series, detrend);
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let scale = 2.0 * dt / n as f64;
    Spectrum {
        f: (0..=half).map(|k| k as f64 / (n as f64 * dt)).collect(),
        psd: (0..=half).map(|k| scale * buf[k].norm_sqr()).collect(),
    }
}

/// Biased autocovariance r_m = (1/N) Σ x_i x_{i+m}, m = 0..N−1.
pub fn autocovariance(series: &[f64], detrend: bool) -> Vec<f64> {
    let n = series.len();
    let x = prepared(series, detrend);
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).chain(std::iter::repeat_n(Complex64::new(0.0, 0.0), n)).collect();
    planner.plan_fft_forward(2 * n).process(&mut buf);
    for v in &mut buf {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(2 * n).process(&mut buf);
    let norm = 1.0 / (2.0 * n as f64 * n as f64);
    buf[..n].iter().map(|c| c.re * norm).collect()
}

/// Wiener–Khinchin estimate: transform of the biased autocovariance,
/// one-sided, on the grid k/(2N dt), k = 0..=N.
pub fn wiener_khinchin(series: &[f64], dt: f64, detrend: bool) -> Spectrum {
    let n = series.len();
    let r = autocovariance(series, detrend);
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    buf[0] = Complex64::new(r[0], 0.0);
    for m in 1..n {
        buf[m] = Complex64::new(r[m], 0.0);
        buf[2 * n - m] = Complex64::new(r[m], 0.0);
    }
    FftPlanner::new().plan_fft_forward(2 * n).process(&mut buf);
    Spectrum {
        f: (0..=n).map(|k| k as f64 / (2.0 * n as f64 * dt)).collect(),
        psd: (0..=n).map(|k| (2.0 * dt * buf[k].re).max(0.0)).collect(),
    }
}

/// Boxcar(w)-smoothed OU autocorrelation at lag `tau`, for unit
/// unsmoothed variance and correlation time `t_c`.
pub fn smoothed_ou_correlation(tau: f64, t_c: f64, w: f64) -> f64 {
    let tau = tau.abs();
    if w <= 0.0 {
        return (-tau / t_c).exp();
    }
    let th = 1.0 / t_c;
    let x = th * w;
    if x < 1e-6 {
        return (-tau * th).exp();
    }
    let norm = 1.0 / (x * x);
    if tau >= w {
        norm * (-th * tau).exp() * ((x).exp() + (-x).exp() - 2.0)
    } else {
        norm * (2.0 * th * (w - tau) + (-th * (w + tau)).exp() + (-th * (w - tau)).exp() - 2.0 * (-th * tau).exp())
    }
}

/// Boxcar(w)-smoothed white noise, relative to its zero-lag value.
fn smoothed_white(tau: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return if tau == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - tau.abs() / w).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuFit {
    /// Standard deviation of the underlying (unsmoothed) OU process.
    pub sigma: f64,
    pub t_c: f64,
    /// White-floor variance relative to σ².
    pub nu: f64,
    pub loglik: f64,
    pub n_points: usize,
    pub converged: bool,
}

struct Reml {
    /// Regular sample spacing, s.
    spacing: f64,
    y: Vec<f64>,
    window: f64,
    log_tc_bounds: (f64, f64),
    log_nu_bounds: (f64, f64),
}

/// Durbin–Levinson innovations for a stationary Toeplitz covariance.
/// Returns ln|C| and the quadratic forms 1ᵀC⁻¹1, 1ᵀC⁻¹y, yᵀC⁻¹y.
fn toeplitz_forms(gamma: &[f64], y: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let m = y.len();
    let mut phi = vec![0.0; m];
    let mut prev = vec![0.0; m];
    let mut v = gamma[0];
    if !(v > 0.0) {
        return None;
    }
    let (mut logdet, mut s11, mut s1y, mut syy) = (v.ln(), 1.0 / v, y[0] / v, y[0] * y[0] / v);
    for k in 1..m {
        let mut acc = gamma[k];
        for j in 1..k {
            acc -= prev[j] * gamma[k - j];
        }
        let refl = acc / v;
        phi[k] = refl;
        for j in 1..k {
            phi[j] = prev[j] - refl * prev[k - j];
        }
        v *= 1.0 - refl * refl;
        if !(v > 0.0) {
            return None;
        }
        prev[1..=k].copy_from_slice(&phi[1..=k]);
        let (mut e1, mut ey) = (1.0, y[k]);
        for j in 1..=k {
            e1 -= phi[j];
            ey -= phi[j] * y[k - j];
        }
        logdet += v.ln();
        s11 += e1 * e1 / v;
        s1y += e1 * ey / v;
        syy += ey * ey / v;
    }
    Some((logdet, s11, s1y, syy))
}

impl Reml {
    /// Profiled negative REML log-likelihood and σ̂².
    fn evaluate(&self, log_tc: f64, log_nu: f64) -> Option<(f64, f64)> {
        let m = self.y.len();
        let (tc, nu) = (log_tc.exp(), log_nu.exp());
        let gamma: Vec<f64> = (0..m)
            .map(|k| {
                let tau = k as f64 * self.spacing;
                smoothed_ou_correlation(tau, tc, self.window) + nu * smoothed_white(tau, self.window)
            })
            .collect();
        let (logdet, s11, s1y, syy) = toeplitz_forms(&gamma, &self.y)?;
        let q = syy - s1y * s1y / s11;
        let dof = (m - 1) as f64;
        let sigma2 = q / dof;
        if !(sigma2 > 0.0) {
            return None;
        }
        Some((0.5 * (dof * sigma2.ln() + logdet + s11.ln()), sigma2))
    }
}

impl CostFunction for Reml {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (a, b) = (p[0], p[1]);
        let ca = a.clamp(self.log_tc_bounds.0, self.log_tc_bounds.1);
        let cb = b.clamp(self.log_nu_bounds.0, self.log_nu_bounds.1);
        let penalty = 1e3 * ((a - ca).powi(2) + (b - cb).powi(2));
        Ok(self.evaluate(ca, cb).map(|v| v.0).unwrap_or(1e300) + penalty)
    }
}

/// Restricted maximum-likelihood fit of a boxcar-smoothed OU process plus a
/// smoothed white floor, with unknown constant mean. The series is
/// decimated to roughly one sample per window (at most `max_points`).
pub fn fit_ou(series: &[f64], dt: f64, window: f64, max_points: usize) -> Result<OuFit> {
    if series.len() < 8 {
        return Err(Error::Domain("OU fit needs at least 8 samples".into()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("OU fit input contains non-finite values".into()));
    }
    let mut step = ((window / dt - 1e-9).ceil() as usize).max(1);
    let max_points = max_points.max(8);
    if series.len() / step > max_points {
        step = series.len().div_ceil(max_points);
    }
    let idx: Vec<usize> = (0..series.len()).rev().step_by(step).collect::<Vec<_>>().into_iter().rev().collect();
    let t: Vec<f64> = idx.iter().map(|&i| i as f64 * dt).collect();
    let yv: Vec<f64> = idx.iter().map(|&i| series[i]).collect();
    let mean = yv.iter().sum::<f64>() / yv.len() as f64;
    let scale = (yv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / yv.len() as f64).sqrt();
    if !(scale > 0.0) {
        return Ok(OuFit { sigma: 0.0, t_c: f64::NAN, nu: 0.0, loglik: f64::NAN, n_points: yv.len(), converged: false });
    }
    let record = t[t.len() - 1] - t[0];
    let spacing = step as f64 * dt;
    let problem = Reml {
        y: yv.iter().map(|v| (v - mean) / scale).collect(),
        spacing: t[1] - t[0],
        window: if window > dt { window } else { 0.0 },
        log_tc_bounds: ((0.1 * spacing).ln(), (100.0 * record).ln()),
        log_nu_bounds: (1e-6f64.ln(), 1e3f64.ln()),
    };
    let start = (0.25 * record).max(spacing).ln();
    let simplex = vec![vec![start, 0.1f64.ln()], vec![start + 1.0, 0.1f64.ln()], vec![start, 0.1f64.ln() + 2.0]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-9)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(400))
        .run()
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let state = res.state();
    let best = state.best_param.clone().ok_or_else(|| Error::Numerical("OU fit produced no estimate".into()))?;
    let problem = res.problem.problem.as_ref().ok_or_else(|| Error::Numerical("OU fit lost its problem".into()))?;
    let lt = best[0].clamp(problem.log_tc_bounds.0, problem.log_tc_bounds.1);
    let ln = best[1].clamp(problem.log_nu_bounds.0, problem.log_nu_bounds.1);
    let (nll, sigma2) = problem.evaluate(lt, ln).ok_or_else(|| Error::Numerical("OU covariance not positive definite".into()))?;
    let at_bound = (lt - problem.log_tc_bounds.0).abs() < 1e-6 || (lt - problem.log_tc_bounds.1).abs() < 1e-6;
    let converged = state.iter < 400 && !at_bound;
    Ok(OuFit {
        sigma: sigma2.sqrt() * scale,
        t_c: lt.exp(),
        nu: ln.exp(),
        loglik: -nll,
        n_points: problem.y.len(),
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSpectrum {
    pub spectrum: Spectrum,
    pub ou: Option<OuFit>,
    pub fit_error: Option<String>,
}

/// Wiener–Khinchin spectrum of a series sampled every `dt`, plus the OU
/// model fit. `window` is the smoothing applied upstream (0 for raw data).
pub fn fluctuation_spectrum(series: &[f64], dt: f64, detrend: bool, window: f64) -> Result<FluctuationSpectrum> {
    if series.len() < MIN_SPECTRUM_POINTS {
        return Err(Error::Domain(format!(
            "fluctuation spectrum needs at least {MIN_SPECTRUM_POINTS} points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values; fill gaps first".into()));
    }
    let spectrum = wiener_khinchin(series, dt, detrend);
    let (ou, fit_error) = match fit_ou(series, dt, window, 1500) {
        Ok(f) if f.converged => (Some(f), None),
        Ok(f) => (Some(f), Some("OU fit did not converge or hit a bound".to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(FluctuationSpectrum { spectrum, ou, fit_error })
}

/// Linear interpolation over non-finite entries; leading/trailing gaps take
/// the nearest finite value. Returns `None` if nothing is finite.
pub fn fill_gaps(series: &[f64]) -> Option<Vec<f64>> {
    let good: Vec<usize> = (0..series.len()).filter(|&i| series[i].is_finite()).collect();
    let (&first, &last) = (good.first()?, good.last()?);
    let mut out = series.to_vec();
    for v in out.iter_mut().take(first) {
        *v = series[first];
    }
    for v in out.iter_mut().skip(last + 1) {
        *v = series[last];
    }
    for w in good.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (i, v) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            *v = series[a] + (series[b] - series[a]) * (i - a) as f64 / (b - a) as f64;
        }
    }
    Some(out)
}
