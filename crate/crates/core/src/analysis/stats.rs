//! Series statistics: histograms, deviation curves, Allan deviation and
//! the σ ∝ √n law.

use nalgebra::Vector3;

use super::lm::{minimize, LmOptions, Model};
use crate::error::{Error, Result};

pub const MIN_HISTOGRAM_POINTS: usize = 100;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation about the sample mean.
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub sample_mean: f64,
    pub sample_sigma: f64,
    pub fit_mean: f64,
    pub fit_sigma: f64,
    pub fit_amplitude: f64,
    pub degenerate: bool,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

struct GaussCounts<'a> {
    x: &'a [f64],
    y: Vec<f64>,
}

impl Model<3> for GaussCounts<'_> {
    fn eval(&self, i: usize, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let (a, mu, s) = (p[0], p[1], p[2]);
        let z = (self.x[i] - mu) / s;
        let e = (-0.5 * z * z).exp();
        (a * e, Vector3::new(e, a * e * z / s, a * e * z * z / s))
    }
    fn len(&self) -> usize {
        self.x.len()
    }
    fn observed(&self, i: usize) -> f64 {
        self.y[i]
    }
    fn weight(&self, i: usize) -> f64 {
        1.0 / self.y[i].max(1.0)
    }
    fn clamp(&self, p: &mut Vector3<f64>) {
        p[2] = p[2].abs().max(1e-300);
    }
}

/// Freedman–Diaconis histogram with a least-squares Gaussian fit to the
/// counts. Negative values are kept as they are.
pub fn histogram_stats(series: &[f64]) -> Result<Histogram> {
    let x: Vec<f64> = series.iter().copied().filter(|v| v.is_finite()).collect();
    if x.len() < MIN_HISTOGRAM_POINTS {
        return Err(Error::Domain(format!("histogram needs at least {MIN_HISTOGRAM_POINTS} finite points, got {}", x.len())));
    }
    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);
    let m = mean(&x);
    let sd = std_dev(&x);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi == lo {
        return Ok(Histogram {
            edges: vec![lo - 0.5, lo + 0.5],
            counts: vec![x.len() as u64],
            sample_mean: m,
            sample_sigma: 0.0,
            fit_mean: m,
            fit_sigma: 0.0,
            fit_amplitude: x.len() as f64,
            degenerate: true,
        });
    }
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let h = if iqr > 0.0 { 2.0 * iqr / (x.len() as f64).cbrt() } else { (hi - lo) / (x.len() as f64).sqrt() };
    let bins = (((hi - lo) / h).ceil() as usize).clamp(1, 10_000);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &v in &x {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let model = GaussCounts { x: &centers, y: counts.iter().map(|&c| c as f64).collect() };
    let amp0 = x.len() as f64 * width / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let out = minimize(&model, Vector3::new(amp0, m, sd), &LmOptions::default());
    Ok(Histogram {
        edges,
        counts,
        sample_mean: m,
        sample_sigma: sd,
        fit_mean: out.params[1],
        fit_sigma: out.params[2].abs(),
        fit_amplitude: out.params[0],
        degenerate: false,
    })
}

/// Trailing boxcar average of `len` samples, one output per full window.
pub fn boxcar(series: &[f64], len: usize) -> Vec<f64> {
    if len <= 1 {
        return series.to_vec();
    }
    if series.len() < len {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(series.len() - len + 1);
    let mut acc: f64 = series[..len].iter().sum();
    out.push(acc / len as f64);
    for i in len..series.len() {
        acc += series[i] - series[i - len];
        out.push(acc / len as f64);
    }
    out
}

/// RMS over non-overlapping segments of `seg` samples of each segment's
/// standard deviation; `None` if the series is shorter than one segment.
pub fn segment_sigma(series: &[f64], seg: usize) -> Option<f64> {
    if seg < 2 || series.len() < seg {
        return None;
    }
    let k = series.len() / seg;
    let ms: f64 = (0..k).map(|j| std_dev(&series[j * seg..(j + 1) * seg]).powi(2)).sum::<f64>() / k as f64;
    Some(ms.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationTable {
    pub acquisition_lengths: Vec<f64>,
    pub windows: Vec<f64>,
    /// sigma[i][j]: acquisition length i, window j; NaN where the record is too short.
    pub sigma: Vec<Vec<f64>>,
    /// Zero-window intercept of a straight line through σ(window), per acquisition length.
    pub zero_window: Vec<f64>,
    pub partial: bool,
}

/// Standard deviation versus acquisition length and averaging window, the
/// windows applied here as trailing boxcars on one series.
pub fn deviation_curves(series: &[f64], dt: f64, acquisition_lengths: &[f64], windows: &[f64]) -> Result<DeviationTable> {
    if !(dt > 0.0) {
        return Err(Error::Domain("dt must be > 0".into()));
    }
    let smoothed: Vec<Vec<f64>> = windows.iter().map(|&w| boxcar(series, ((w / dt).round() as usize).max(1))).collect();
    let cols: Vec<(f64, &[f64], f64)> = windows.iter().zip(&smoothed).map(|(&w, s)| (w, s.as_slice(), dt)).collect();
    deviation_table(&cols, acquisition_lengths)
}

/// Same table from one series per window `(window, series, sample spacing)`,
/// each series already averaged over its window.
pub fn deviation_table(columns: &[(f64, &[f64], f64)], acquisition_lengths: &[f64]) -> Result<DeviationTable> {
    if columns.iter().any(|c| !(c.2 > 0.0)) {
        return Err(Error::Domain("sample spacing must be > 0".into()));
    }
    let mut partial = false;
    let mut sigma = Vec::with_capacity(acquisition_lengths.len());
    for &l in acquisition_lengths {
        let row: Vec<f64> = columns
            .iter()
            .map(|&(_, s, dt)| {
                if l > s.len() as f64 * dt * (1.0 + 1e-9) {
                    return f64::NAN;
                }
                segment_sigma(s, (l / dt).round() as usize).unwrap_or(f64::NAN)
            })
            .collect();
        if row.iter().any(|v| v.is_nan()) {
            partial = true;
        }
        sigma.push(row);
    }
    let windows: Vec<f64> = columns.iter().map(|c| c.0).collect();
    let zero_window = sigma
        .iter()
        .map(|row| {
            let pts: Vec<(f64, f64)> = windows.iter().zip(row).filter(|(_, s)| s.is_finite()).map(|(&w, &s)| (w, s)).collect();
            line_intercept(&pts)
        })
        .collect();
    Ok(DeviationTable { acquisition_lengths: acquisition_lengths.to_vec(), windows, sigma, zero_window, partial })
}

fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Some((my - slope * mx, slope))
}

fn line_intercept(pts: &[(f64, f64)]) -> f64 {
    line_fit(pts).map(|f| f.0).unwrap_or(f64::NAN)
}

/// Log-log slope of σ versus acquisition length over [l_min, l_max]
/// (one window column). A plateau has slope near 0; a random walk ≈ 0.5.
pub fn plateau_slope(table: &DeviationTable, window_index: usize, l_min: f64, l_max: f64) -> f64 {
    let pts: Vec<(f64, f64)> = table
        .acquisition_lengths
        .iter()
        .zip(&table.sigma)
        .filter(|(&l, row)| l >= l_min && l <= l_max && row[window_index].is_finite() && row[window_index] > 0.0)
        .map(|(&l, row)| (l.ln(), row[window_index].ln()))
        .collect();
    line_fit(&pts).map(|f| f.1).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllanResult {
    pub tau: f64,
    pub non_overlapping: f64,
    pub overlapping: f64,
    /// RMS in-window standard deviation over windows of `window` seconds.
    pub windowed_std: f64,
    pub window: f64,
}

/// Two-sample Allan deviation of a frequency series at averaging time `tau`,
/// with the overlapping estimator and a windowed standard deviation alongside.
pub fn allan_deviation(series: &[f64], dt: f64, tau: f64, window: f64) -> Result<AllanResult> {
    if !(tau >= 2.0 * dt * (1.0 - 1e-9)) {
        return Err(Error::Domain(format!("tau {tau} s must be at least two samples ({} s)", 2.0 * dt)));
    }
    let m = (tau / dt).round() as usize;
    let n = series.len();
    if n < 2 * m {
        return Err(Error::Domain(format!("{n} samples are too few for tau = {tau} s")));
    }
    let blocks: Vec<f64> = series.chunks_exact(m).map(mean).collect();
    let non_overlapping = (0.5 * blocks.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (blocks.len() - 1) as f64).sqrt();
    let avg = boxcar(series, m);
    let pairs = avg.len() - m;
    let overlapping = if pairs > 0 {
        (0.5 * (0..pairs).map(|i| (avg[i + m] - avg[i]).powi(2)).sum::<f64>() / pairs as f64).sqrt()
    } else {
        non_overlapping
    };
    let seg = ((window / dt).round() as usize).min(n);
    let windowed_std = segment_sigma(series, seg).unwrap_or(f64::NAN);
    Ok(AllanResult { tau: m as f64 * dt, non_overlapping, overlapping, windowed_std, window: seg as f64 * dt })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaLaw {
    /// σ = c √n.
    pub c: f64,
    pub c_low: f64,
    pub c_high: f64,
    /// Exponent and its standard error from a free log-log fit.
    pub free_exponent: f64,
    pub free_exponent_se: f64,
    /// ln σ − ln(c √n) per point.
    pub residuals: Vec<f64>,
}

/// Two-sided 95% Student quantile.
fn t95(dof: usize) -> f64 {
    const T: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    match dof {
        0 => f64::INFINITY,
        1..=10 => T[dof - 1],
        11..=20 => 2.2 - 0.0085 * (dof - 10) as f64,
        21..=30 => 2.086 - 0.0044 * (dof - 20) as f64,
        _ => 1.96 + 2.4 / dof as f64,
    }
}

/// Fits σ_ph = c √n in log space.
pub fn sigma_vs_n(points: &[(f64, f64)]) -> Result<SigmaLaw> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(n, s)| *n > 0.0 && *s > 0.0).collect();
    if pts.len() < 3 {
        return Err(Error::Domain("the sqrt(n) law needs at least 3 temperatures with n > 0 and sigma > 0".into()));
    }
    let r: Vec<f64> = pts.iter().map(|(n, s)| s.ln() - 0.5 * n.ln()).collect();
    let k = r.len() as f64;
    let lc = r.iter().sum::<f64>() / k;
    let sd = (r.iter().map(|v| (v - lc).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let half = t95(r.len() - 1) * sd / k.sqrt();
    let logs: Vec<(f64, f64)> = pts.iter().map(|(n, s)| (n.ln(), s.ln())).collect();
    let (icpt, slope) = line_fit(&logs).unwrap_or((f64::NAN, f64::NAN));
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let rss: f64 = logs.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let se = if pts.len() > 2 { (rss / (k - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(SigmaLaw {
        c: lc.exp(),
        c_low: (lc - half).exp(),
        c_high: (lc + half).exp(),
        free_exponent: slope,
        free_exponent_se: se,
        residuals: r.iter().map(|v| v - lc).collect(),
    })
}
