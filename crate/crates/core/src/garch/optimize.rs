//! Simplex search and finite-difference curvature.

use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmConfig {
    pub max_iter: usize,
    /// Relative spread of the simplex costs at which the search stops.
    pub ftol: f64,
    /// Coordinate movement below which polishing restarts stop.
    pub xtol: f64,
}

impl Default for NmConfig {
    fn default() -> Self {
        NmConfig {
            max_iter: 5000,
            ftol: 1e-10,
            xtol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Objective<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Objective<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let v = (self.0)(x);
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Minimize `f` from `x0` with an axis-aligned starting simplex. Non-finite
/// values count as `+∞`. Converged means the simplex costs agree to
/// `ftol · (1 + |f(x0)|)` in standard deviation.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], cfg: NmConfig) -> NmResult {
    let f0 = f(x0);
    let mut simplex = vec![x0.to_vec()];
    for (i, s) in step.iter().enumerate() {
        let mut x = x0.to_vec();
        x[i] += s;
        simplex.push(x);
    }
    let tol = cfg.ftol * (1.0 + if f0.is_finite() { f0.abs() } else { 0.0 });
    let solver = NelderMead::new(simplex).with_sd_tolerance(tol).expect("positive tolerance");
    let run = Executor::new(Objective(&f), solver)
        .configure(|state| state.max_iters(cfg.max_iter as u64))
        .run();
    match run {
        Ok(res) => {
            let state = res.state();
            let x = state.get_best_param().cloned().unwrap_or_else(|| x0.to_vec());
            NmResult {
                f: state.get_best_cost(),
                x,
                iterations: state.get_iter() as usize,
                evaluations: state.get_func_counts().get("cost_count").copied().unwrap_or(0) as usize,
                converged: state.get_termination_reason() == Some(&TerminationReason::SolverConverged),
            }
        }
        Err(_) => NmResult {
            x: x0.to_vec(),
            f: if f0.is_nan() { f64::INFINITY } else { f0 },
            iterations: 0,
            evaluations: 1,
            converged: false,
        },
    }
}

/// Central-difference Hessian of `f` at `x` with per-coordinate steps.
pub fn hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in shifts {
            y[i] += s;
        }
        f(&y)
    };
    let f0 = f(x);
    let mut m = vec![vec![0.0; d]; d];
    for i in 0..d {
        m[i][i] = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])]) - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Matrix inverse; `None` when singular.
pub fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = m.len();
    let a = DMatrix::from_fn(d, d, |i, j| m[i][j]);
    let inv = a.try_inverse()?;
    let out: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| inv[(i, j)]).collect()).collect();
    out.iter().flatten().all(|v| v.is_finite()).then_some(out)
}

/// Standard errors from the inverse of the negated log-likelihood Hessian.
pub fn standard_errors(hess_loglik: &[Vec<f64>]) -> Option<Vec<f64>> {
    let neg: Vec<Vec<f64>> = hess_loglik.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let cov = invert(&neg)?;
    (0..cov.len())
        .map(|i| (cov[i][i] > 0.0 && cov[i][i].is_finite()).then(|| cov[i][i].sqrt()))
        .collect()
}
