//! Lorentzian-plus-background peak fitting.

use nalgebra::{SVector, Vector3, Vector4};

use super::lm::{minimize, LmOptions, Model};
use crate::spectral::SpectrumFrame;

const PI: f64 = std::f64::consts::PI;

/// Fitted sideband parameters. Width is the FWHM in Hz, centre in Hz, area
/// in photons/s, background in photons/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub area: f64,
    pub width: f64,
    pub center: f64,
    pub background: f64,
    pub sigma_area: f64,
    pub sigma_width: f64,
    pub sigma_center: f64,
    pub sigma_background: f64,
    pub converged: bool,
    /// RMS of the normalised residuals; ≈1 for a good fit.
    pub residual_rms: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn failed() -> Self {
        FitResult {
            area: f64::NAN,
            width: f64::NAN,
            center: f64::NAN,
            background: f64::NAN,
            sigma_area: f64::NAN,
            sigma_width: f64::NAN,
            sigma_center: f64::NAN,
            sigma_background: f64::NAN,
            converged: false,
            residual_rms: f64::NAN,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Reweighting passes after the first fit.
    pub reweight_passes: usize,
    /// Smoothing length (bins) used only to initialise.
    pub init_smoothing: usize,
    /// Holds the FWHM at a known value (Hz) and fits area, background and centre.
    pub fixed_width: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { lm: LmOptions::default(), reweight_passes: 1, init_smoothing: 5, fixed_width: None }
    }
}

/// Lorentzian of area `a`, FWHM `w`, centre `c` on background `b`.
#[inline]
pub fn lorentzian_model(f: f64, a: f64, b: f64, c: f64, w: f64) -> f64 {
    let h = 0.5 * w;
    let d = f - c;
    b + a / PI * h / (d * d + h * h)
}

// parameter order: area, background, centre, width
struct Problem<'a> {
    f: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
    width_bounds: (f64, f64),
    center_bounds: (f64, f64),
    scale: Vector4<f64>,
}

impl Model<4> for Problem<'_> {
    fn eval(&self, i: usize, p: &Vector4<f64>) -> (f64, Vector4<f64>) {
        let (a, b, c, w) = (p[0], p[1], p[2], p[3]);
        let h = 0.5 * w;
        let d = self.f[i] - c;
        let den = d * d + h * h;
        let shape = h / (PI * den);
        let g = Vector4::new(
            shape,
            1.0,
            a / PI * h * 2.0 * d / (den * den),
            a / (2.0 * PI) * (d * d - h * h) / (den * den),
        );
        (b + a * shape, g)
    }
    fn len(&self) -> usize {
        self.f.len()
    }
    fn observed(&self, i: usize) -> f64 {
        self.y[i]
    }
    fn weight(&self, i: usize) -> f64 {
        self.w[i]
    }
    fn clamp(&self, p: &mut Vector4<f64>) {
        p[3] = p[3].clamp(self.width_bounds.0, self.width_bounds.1);
        p[2] = p[2].clamp(self.center_bounds.0, self.center_bounds.1);
    }
    fn scale(&self) -> SVector<f64, 4> {
        self.scale
    }
}

struct FixedWidth<'a, 'b> {
    inner: &'b Problem<'a>,
    width: f64,
}

impl Model<3> for FixedWidth<'_, '_> {
    fn eval(&self, i: usize, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let (v, g) = self.inner.eval(i, &Vector4::new(p[0], p[1], p[2], self.width));
        (v, Vector3::new(g[0], g[1], g[2]))
    }
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn observed(&self, i: usize) -> f64 {
        self.inner.observed(i)
    }
    fn weight(&self, i: usize) -> f64 {
        self.inner.weight(i)
    }
    fn clamp(&self, p: &mut Vector3<f64>) {
        p[2] = p[2].clamp(self.inner.center_bounds.0, self.inner.center_bounds.1);
    }
    fn scale(&self) -> SVector<f64, 3> {
        self.inner.scale.fixed_rows::<3>(0).into()
    }
}

/// Initial guess from moments of a lightly smoothed spectrum: edge median
/// for the background, highest bin (lowest frequency on ties) for the
/// centre, half-maximum crossings for the width, excess sum for the area.
pub fn initial_guess(f: &[f64], y: &[f64], smoothing: usize) -> Vector4<f64> {
    let n = y.len();
    let step = (f[n - 1] - f[0]) / (n as f64 - 1.0);
    let half = smoothing / 2;
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let edge = (n / 10).max(1);
    let mut edges: Vec<f64> = smooth[..edge].iter().chain(&smooth[n - edge..]).copied().collect();
    edges.sort_by(f64::total_cmp);
    let bg = if edges.len() % 2 == 1 {
        edges[edges.len() / 2]
    } else {
        0.5 * (edges[edges.len() / 2 - 1] + edges[edges.len() / 2])
    };
    let mut imax = 0;
    for i in 1..n {
        if smooth[i] > smooth[imax] {
            imax = i;
        }
    }
    let height = smooth[imax] - bg;
    let level = bg + 0.5 * height;
    let crossing = |range: &mut dyn Iterator<Item = usize>, toward: isize| -> Option<f64> {
        for i in range {
            if smooth[i] < level {
                let j = (i as isize - toward) as usize;
                let (y0, y1) = (smooth[i], smooth[j]);
                let frac = if y1 != y0 { (level - y0) / (y1 - y0) } else { 0.0 };
                return Some(f[i] + frac * (f[j] - f[i]));
            }
        }
        None
    };
    let left = crossing(&mut (0..imax).rev(), -1).unwrap_or(f[0]);
    let right = crossing(&mut (imax + 1..n), 1).unwrap_or(f[n - 1]);
    let mut width = (right - left).max(2.0 * step);
    if !(height > 0.0) {
        width = 10.0 * step;
    }
    let excess: f64 = y.iter().map(|v| v - bg).sum::<f64>() * step;
    let area = if excess > 0.0 { excess } else { 0.5 * PI * height.max(0.0) * width };
    Vector4::new(area, bg, f[imax], width)
}

/// Fits background + Lorentzian to `y(f)` where each bin is an average of
/// `n_averages` periodograms (σ_i = model_i/√n_averages).
pub fn fit_lorentzian_data(f: &[f64], y: &[f64], n_averages: u32, opts: &FitOptions) -> FitResult {
    let n = f.len();
    if n < 8 || y.len() != n || n_averages == 0 {
        return FitResult::failed();
    }
    let step = (f[n - 1] - f[0]) / (n as f64 - 1.0);
    let span = f[n - 1] - f[0];
    let width_bounds = (step, span);
    // a known width sets the smoothing of the starting point to one linewidth
    let smoothing = match opts.fixed_width {
        Some(w) if w > step => opts.init_smoothing.max((w / step).round() as usize),
        _ => opts.init_smoothing,
    };
    let p0 = initial_guess(f, y, smoothing.max(1));
    let k = n_averages as f64;
    let floor = y.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1e-300 };
    let weights_from = |p: &Vector4<f64>| -> Vec<f64> {
        f.iter()
            .map(|&fi| {
                let m = lorentzian_model(fi, p[0], p[1], p[2], p[3]).max(floor * 1e-3);
                k / (m * m)
            })
            .collect()
    };
    let mut problem = Problem {
        f,
        y,
        w: weights_from(&p0),
        width_bounds,
        center_bounds: (f[0], f[n - 1]),
        scale: Vector4::new(p0[0].abs().max(1e-300), p0[1].abs().max(1e-300), step, step),
    };
    if let Some(width) = opts.fixed_width {
        if !(width > 0.0 && width.is_finite()) {
            return FitResult::failed();
        }
        let mut start = Vector3::new(p0[0], p0[1], p0[2]);
        problem.w = weights_from(&Vector4::new(start[0], start[1], start[2], width));
        let mut out = minimize(&FixedWidth { inner: &problem, width }, start, &opts.lm);
        for _ in 0..opts.reweight_passes {
            start = out.params;
            problem.w = weights_from(&Vector4::new(start[0], start[1], start[2], width));
            out = minimize(&FixedWidth { inner: &problem, width }, start, &opts.lm);
        }
        let p = out.params;
        let sig = |j: usize| out.covariance.map(|c| c[(j, j)].max(0.0).sqrt()).unwrap_or(f64::NAN);
        let sigmas = [sig(0), sig(1), sig(2)];
        let finite = sigmas.iter().all(|s| s.is_finite()) && p.iter().all(|v| v.is_finite());
        return FitResult {
            area: p[0],
            background: p[1],
            center: p[2],
            width,
            sigma_area: sigmas[0],
            sigma_background: sigmas[1],
            sigma_center: sigmas[2],
            sigma_width: 0.0,
            converged: out.converged && finite,
            residual_rms: (out.chi2 / n as f64).sqrt(),
            iterations: out.iterations,
        };
    }
    let mut out = minimize(&problem, p0, &opts.lm);
    for _ in 0..opts.reweight_passes {
        problem.w = weights_from(&out.params);
        let start = out.params;
        out = minimize(&problem, start, &opts.lm);
    }
    let p = out.params;
    let pinned = p[3] <= width_bounds.0 * (1.0 + 1e-9) || p[3] >= width_bounds.1 * (1.0 - 1e-9);
    let sig = |j: usize| out.covariance.map(|c| c[(j, j)].max(0.0).sqrt()).unwrap_or(f64::NAN);
    let sigmas = [sig(0), sig(1), sig(2), sig(3)];
    let finite = sigmas.iter().all(|s| s.is_finite()) && p.iter().all(|v| v.is_finite());
    FitResult {
        area: p[0],
        background: p[1],
        center: p[2],
        width: p[3],
        sigma_area: sigmas[0],
        sigma_background: sigmas[1],
        sigma_center: sigmas[2],
        sigma_width: sigmas[3],
        converged: out.converged && !pinned && finite && p[3] > 0.0,
        residual_rms: (out.chi2 / n as f64).sqrt(),
        iterations: out.iterations,
    }
}

pub fn fit_lorentzian(frame: &SpectrumFrame) -> FitResult {
    fit_lorentzian_with(frame, &FitOptions::default())
}

pub fn fit_lorentzian_with(frame: &SpectrumFrame, opts: &FitOptions) -> FitResult {
    fit_lorentzian_data(&frame.f_grid(), &frame.psd, frame.n_averages, opts)
}
