//! Weighted Levenberg–Marquardt with analytic Jacobians.

use nalgebra::{DMatrix, DVector};

/// A model `y = f(θ, x)` returning the value and ∂f/∂θ.
pub(crate) trait Model {
    fn n_params(&self) -> usize;
    fn eval(&self, theta: &[f64], x: f64, grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub theta: Vec<f64>,
    /// Parameter covariance; `None` when the normal matrix is singular.
    pub covariance: Option<DMatrix<f64>>,
    pub chi2: f64,
    pub n_iter: usize,
    pub converged: bool,
    pub message: Option<String>,
}

const MAX_ITER: usize = 1000;
const STEP_TOL: f64 = 1e-13;
/// Reciprocal condition number below which the fit is called rank-deficient.
const RCOND_MIN: f64 = 1e-13;

fn normal_equations<M: Model>(m: &M, theta: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> (DMatrix<f64>, DVector<f64>, f64) {
    let p = m.n_params();
    let mut jtj = DMatrix::zeros(p, p);
    let mut jtr = DVector::zeros(p);
    let mut chi2 = 0.0;
    let mut g = vec![0.0; p];
    for i in 0..x.len() {
        let f = m.eval(theta, x[i], &mut g);
        let r = y[i] - f;
        chi2 += w[i] * r * r;
        for a in 0..p {
            jtr[a] += w[i] * g[a] * r;
            for b in 0..=a {
                jtj[(a, b)] += w[i] * g[a] * g[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            jtj[(b, a)] = jtj[(a, b)];
        }
    }
    (jtj, jtr, chi2)
}

fn chi2_of<M: Model>(m: &M, theta: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let mut g = vec![0.0; m.n_params()];
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let r = yi - m.eval(theta, xi, &mut g);
            wi * r * r
        })
        .sum()
}

/// Reciprocal condition number of a symmetric PSD matrix after scaling it
/// to unit diagonal (so parameter units do not matter).
fn rcond(a: &DMatrix<f64>) -> f64 {
    let p = a.nrows();
    let d: Vec<f64> = (0..p).map(|i| a[(i, i)].max(0.0).sqrt()).collect();
    if d.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return 0.0;
    }
    let s = DMatrix::from_fn(p, p, |i, j| a[(i, j)] / (d[i] * d[j]));
    let ev = s.symmetric_eigenvalues();
    let max = ev.iter().cloned().fold(0.0, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        (min / max).max(0.0)
    } else {
        0.0
    }
}

fn covariance(jtj: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if rcond(jtj) < RCOND_MIN {
        return None;
    }
    jtj.clone().try_inverse()
}

pub(crate) fn minimize<M: Model>(m: &M, theta0: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> Outcome {
    let p = m.n_params();
    let mut theta = theta0.to_vec();
    let (mut jtj, mut jtr, mut chi2) = normal_equations(m, &theta, x, y, w);
    if !chi2.is_finite() {
        return Outcome {
            theta,
            covariance: None,
            chi2,
            n_iter: 0,
            converged: false,
            message: Some("model is not finite at the initial guess".into()),
        };
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < MAX_ITER {
        n_iter += 1;
        let mut a = jtj.clone();
        for i in 0..p {
            a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
        }
        let Some(step) = a.lu().solve(&jtr) else {
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
            continue;
        };
        let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        let c = chi2_of(m, &trial, x, y, w);
        if c.is_finite() && c <= chi2 {
            let small = step.iter().zip(&trial).all(|(s, t)| s.abs() <= STEP_TOL * (t.abs() + 1e-3));
            let flat = chi2 - c <= 1e-15 * chi2 || chi2 == 0.0;
            theta = trial;
            (jtj, jtr, chi2) = normal_equations(m, &theta, x, y, w);
            lambda = (lambda * 0.2).max(1e-15);
            if small || (flat && lambda <= 1e-12) {
                converged = true;
                break;
            }
        } else {
            lambda *= 8.0;
            if lambda > 1e16 {
                // no downhill direction left: at a minimum to working precision
                converged = true;
                break;
            }
        }
    }
    let cov = covariance(&jtj);
    let mut message = None;
    if !converged {
        message = Some(format!("no convergence in {MAX_ITER} iterations"));
    } else if cov.is_none() {
        converged = false;
        message = Some("rank-deficient Jacobian: parameters are not identifiable from the data".into());
    }
    Outcome {
        theta,
        covariance: cov,
        chi2,
        n_iter,
        converged,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line;
    impl Model for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, t: &[f64], x: f64, g: &mut [f64]) -> f64 {
            g[0] = 1.0;
            g[1] = x;
            t[0] + t[1] * x
        }
    }

    #[test]
    fn recovers_a_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 - 0.5 * x).collect();
        let o = minimize(&Line, &[0.0, 0.0], &x, &y, &vec![1.0; 10]);
        assert!(o.converged);
        assert!((o.theta[0] - 2.0).abs() < 1e-10 && (o.theta[1] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn singular_is_flagged() {
        // all x equal: slope and intercept cannot be separated
        let o = minimize(&Line, &[0.0, 0.0], &[1.0; 5], &[3.0; 5], &[1.0; 5]);
        assert!(!o.converged);
        assert!(o.covariance.is_none());
    }
}
