//! Small dense Levenberg-Marquardt solver for weighted least squares with
//! a fixed, compile-time parameter count.

use nalgebra::{SMatrix, SVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Convergence when every accepted step satisfies |δp_j| < tol·(|p_j| + scale_j).
    pub rel_step_tol: f64,
    pub lambda0: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 200, rel_step_tol: 1e-8, lambda0: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome<const P: usize> {
    pub params: SVector<f64, P>,
    /// (JᵀWJ)⁻¹ at the solution, `None` if singular.
    pub covariance: Option<SMatrix<f64, P, P>>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A weighted least-squares problem: model value and gradient at one sample.
pub trait Model<const P: usize> {
    fn eval(&self, i: usize, p: &SVector<f64, P>) -> (f64, SVector<f64, P>);
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn observed(&self, i: usize) -> f64;
    /// Inverse variance of sample `i`.
    fn weight(&self, i: usize) -> f64;
    /// Projects parameters back into the feasible box.
    fn clamp(&self, p: &mut SVector<f64, P>) {
        let _ = p;
    }
    /// Typical magnitude of each parameter, used when a parameter is near zero.
    fn scale(&self) -> SVector<f64, P> {
        SVector::from_element(1e-300)
    }
}

fn normal_equations<const P: usize, M: Model<P>>(
    m: &M,
    p: &SVector<f64, P>,
) -> (SMatrix<f64, P, P>, SVector<f64, P>, f64) {
    let mut jtj = SMatrix::<f64, P, P>::zeros();
    let mut jtr = SVector::<f64, P>::zeros();
    let mut chi2 = 0.0;
    for i in 0..m.len() {
        let (v, g) = m.eval(i, p);
        let w = m.weight(i);
        let r = m.observed(i) - v;
        chi2 += w * r * r;
        jtr += g * (w * r);
        jtj.ger(w, &g, &g, 1.0);
    }
    (jtj, jtr, chi2)
}

fn chi2_only<const P: usize, M: Model<P>>(m: &M, p: &SVector<f64, P>) -> f64 {
    (0..m.len())
        .map(|i| {
            let r = m.observed(i) - m.eval(i, p).0;
            m.weight(i) * r * r
        })
        .sum()
}

const CHI2_TOL: f64 = 1e-10;

pub fn minimize<const P: usize, M: Model<P>>(
    m: &M,
    p0: SVector<f64, P>,
    opts: &LmOptions,
) -> LmOutcome<P> {
    let mut p = p0;
    m.clamp(&mut p);
    let scale = m.scale();
    let mut lambda = opts.lambda0;
    let (mut jtj, mut jtr, mut chi2) = normal_equations(m, &p);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut a = jtj;
        for j in 0..P {
            a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
        }
        let step = match a.cholesky() {
            Some(c) => c.solve(&jtr),
            None => {
                lambda *= 10.0;
                if lambda > 1e16 {
                    break;
                }
                continue;
            }
        };
        let mut trial = p + step;
        m.clamp(&mut trial);
        let trial_chi2 = chi2_only(m, &trial);
        if trial_chi2.is_finite() && trial_chi2 <= chi2 {
            let taken = trial - p;
            let small_step = (0..P).all(|j| taken[j].abs() < opts.rel_step_tol * (p[j].abs() + scale[j]));
            // relative χ² reduction, actual and predicted by the linear model, at round-off level
            let predicted = 2.0 * taken.dot(&jtr) - (jtj * taken).dot(&taken);
            let flat = chi2 - trial_chi2 <= CHI2_TOL * chi2 && predicted.abs() <= CHI2_TOL * chi2;
            let small = small_step || flat;
            p = trial;
            (jtj, jtr, chi2) = normal_equations(m, &p);
            lambda = (lambda / 10.0).max(1e-12);
            if small {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left at working precision
                converged = true;
                break;
            }
        }
    }
    LmOutcome { params: p, covariance: jtj.try_inverse(), chi2, iterations, converged }
}
