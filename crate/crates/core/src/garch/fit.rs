//! Two-step Gaussian quasi maximum likelihood.
//!
//! Step 1 fits an EGARCH(1,1) to each demeaned series. Step 2 fits the
//! correlation recursion to the standardized residuals with the
//! equicorrelation (or bivariate) normal likelihood. `β` is searched as
//! `tanh b` so that every trial point is stationary.

use rayon::prelude::*;
use serde::Serialize;

use super::correlation::{corr_filter, corr_loglik, CorrDynamicsParams, CorrMode, FilterOptions};
use super::egarch::{egarch_filter, egarch_loglik, EgarchParams};
use super::optimize::{hessian, nelder_mead, standard_errors, NmConfig, NmResult};
use crate::distributions::omega_n;
use crate::error::{Error, Result};
use crate::sample::{MultivariateSample, Panel};
use crate::similarity::{phi_r_bivariate, phi_r_multivariate};

/// `|β|` or `β + κ` at or above this is reported as near the boundary.
pub const BOUNDARY_FLAG: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Bivariate,
    Deco,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub kind: ModelKind,
    pub min_t: usize,
    pub filter: FilterOptions,
    pub optimizer: NmConfig,
}

impl FitConfig {
    pub fn new(kind: ModelKind) -> Self {
        FitConfig {
            kind,
            min_t: 100,
            filter: FilterOptions::default(),
            optimizer: NmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimReport {
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best log-likelihood among the starting points.
    pub start_loglik: f64,
    pub starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetFit {
    pub params: EgarchParams,
    /// Standard errors of `(α, β, κ, η)`; `None` when the curvature is not
    /// negative definite.
    pub se: Option<Vec<f64>>,
    pub mu: f64,
    pub h0: f64,
    pub loglik: f64,
    pub optim: OptimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrFit {
    pub params: CorrDynamicsParams,
    /// Standard errors of `(α, β, κ)`.
    pub se: Option<Vec<f64>>,
    pub phi0: f64,
    pub loglik: f64,
    pub optim: OptimReport,
    pub persistence: f64,
    pub near_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredPaths {
    /// Conditional variances, one vector per asset.
    pub h: Vec<Vec<f64>>,
    /// Standardized residuals, one vector per asset.
    pub z: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub degenerate_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStepFit {
    pub assets: Vec<AssetFit>,
    pub corr: CorrFit,
    pub paths: FilteredPaths,
    /// Sum of the step-1 and step-2 log-likelihoods.
    pub loglik: f64,
    pub converged: bool,
}

fn egarch_from_theta(th: &[f64]) -> Option<EgarchParams> {
    EgarchParams::new(th[0], th[1].tanh(), th[2], th[3]).ok()
}

fn corr_from_theta(th: &[f64], mode: CorrMode) -> Option<CorrDynamicsParams> {
    CorrDynamicsParams::new(th[0], th[1].tanh(), th[2], mode).ok()
}

/// Best of several simplex runs, polished by restarts from the winner.
fn multistart<F: Fn(&[f64]) -> f64 + Sync>(f: &F, starts: &[Vec<f64>], step: &[f64], cfg: NmConfig) -> (NmResult, f64, usize) {
    let start_best = starts.iter().map(|s| f(s)).fold(f64::INFINITY, f64::min);
    let runs: Vec<NmResult> = starts.par_iter().map(|s| nelder_mead(f, s, step, cfg)).collect();
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .expect("at least one start");
    let (mut iterations, mut evaluations) = (best.iterations, best.evaluations);
    let small: Vec<f64> = step.iter().map(|s| 0.1 * s).collect();
    for _ in 0..5 {
        let again = nelder_mead(f, &best.x, &small, cfg);
        iterations += again.iterations;
        evaluations += again.evaluations;
        let gain = best.f - again.f;
        let moved = again.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let converged = again.converged;
        if again.f <= best.f {
            best = again;
        }
        best.converged = converged;
        if gain <= cfg.ftol * (1.0 + best.f.abs()) && moved <= 10.0 * cfg.xtol {
            break;
        }
    }
    best.iterations = iterations;
    best.evaluations = evaluations;
    (best, -start_best, starts.len())
}

fn report(r: &NmResult, start_loglik: f64, starts: usize) -> OptimReport {
    OptimReport {
        converged: r.converged,
        iterations: r.iterations,
        evaluations: r.evaluations,
        start_loglik,
        starts,
    }
}

fn hessian_steps(x: &[f64], beta_index: usize) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let h = 1e-4 * v.abs().max(0.05);
            if i == beta_index {
                h.min(0.25 * (1.0 - v.abs()))
            } else {
                h
            }
        })
        .collect()
}

/// Deterministic EGARCH starting points in `(α, b, κ, η)`.
pub fn default_egarch_starts(variance: f64) -> Vec<Vec<f64>> {
    let lv = variance.ln();
    [(0.9, 0.1, 0.0), (0.95, 0.05, 0.5), (0.8, 0.2, 0.2), (0.98, 0.1, 0.5), (0.6, 0.1, 0.0)]
        .iter()
        .map(|&(b, k, e): &(f64, f64, f64)| vec![(1.0 - b) * lv, b.atanh(), k, e])
        .collect()
}

/// Deterministic starting points in `(α, b, κ)`, each centred on `φ̄`.
pub fn default_corr_starts(phi_bar: f64, omega: f64) -> Vec<Vec<f64>> {
    [(0.9, 0.05), (0.95, 0.03), (0.8, 0.1), (0.97, 0.02), (0.5, 0.2)]
        .iter()
        .map(|&(b, k): &(f64, f64)| vec![phi_bar * (1.0 - b - k) + k * omega, b.atanh(), k])
        .collect()
}

/// Step 1 for one series.
pub fn fit_egarch(returns: &[f64], starts: Option<Vec<Vec<f64>>>, cfg: NmConfig) -> Result<AssetFit> {
    let t = returns.len() as f64;
    let mu = returns.iter().sum::<f64>() / t;
    let h0 = returns.iter().map(|r| (r - mu) * (r - mu)).sum::<f64>() / t;
    if !(h0 > 0.0) {
        return Err(Error::ZeroDispersion { column: 0 });
    }
    let objective = |th: &[f64]| match egarch_from_theta(th) {
        Some(p) => -egarch_loglik(returns, &p, mu, h0),
        None => f64::INFINITY,
    };
    let starts = starts.unwrap_or_else(|| default_egarch_starts(h0));
    let (best, start_loglik, n_starts) = multistart(&objective, &starts, &[0.1, 0.3, 0.05, 0.2], cfg);
    let params = egarch_from_theta(&best.x).ok_or_else(|| Error::Numerical {
        context: "EGARCH fit",
        detail: "no finite likelihood at any start".into(),
    })?;
    let natural = [params.alpha, params.beta, params.kappa, params.eta];
    let ll = |x: &[f64]| match EgarchParams::new(x[0], x[1], x[2], x[3]) {
        Ok(p) => egarch_loglik(returns, &p, mu, h0),
        Err(_) => f64::NEG_INFINITY,
    };
    let se = standard_errors(&hessian(ll, &natural, &hessian_steps(&natural, 1)));
    Ok(AssetFit {
        params,
        se,
        mu,
        h0,
        loglik: -best.f,
        optim: report(&best, start_loglik, n_starts),
    })
}

/// Mean of `φ_r` over non-degenerate rows.
fn mean_similarity<P: Panel>(z: &P, kind: ModelKind) -> Result<f64> {
    let (mut s, mut m) = (0.0, 0usize);
    for r in z.rows() {
        let v = match kind {
            ModelKind::Bivariate => phi_r_bivariate(r[0], r[1]),
            ModelKind::Deco => phi_r_multivariate(r),
        };
        match v {
            Ok(v) => {
                s += v;
                m += 1;
            }
            Err(Error::Degenerate { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if m == 0 {
        return Err(Error::EmptySample);
    }
    Ok(s / m as f64)
}

/// Step 2 on a standardized panel. `phi0` defaults to the sample similarity
/// (plus `ω_n` for DECO).
pub fn fit_correlation<P: Panel + Sync>(
    z: &P,
    kind: ModelKind,
    phi0: Option<f64>,
    starts: Option<Vec<Vec<f64>>>,
    filter: FilterOptions,
    cfg: NmConfig,
) -> Result<CorrFit> {
    let n = z.dim();
    let mode = match kind {
        ModelKind::Bivariate => {
            if n != 2 {
                return Err(Error::Dimension(format!("bivariate mode needs 2 columns, got {n}")));
            }
            CorrMode::Bivariate
        }
        ModelKind::Deco => CorrMode::Deco { n },
    };
    let omega = omega_n(n)?;
    let phi0 = match phi0 {
        Some(p) => p,
        None => mean_similarity(z, kind)? + if kind == ModelKind::Deco { omega } else { 0.0 },
    };
    let objective = |th: &[f64]| match corr_from_theta(th, mode) {
        Some(p) => match corr_filter(z, &p, phi0, &filter) {
            Ok(path) => -corr_loglik(z, &path),
            Err(_) => f64::INFINITY,
        },
        None => f64::INFINITY,
    };
    let starts = starts.unwrap_or_else(|| default_corr_starts(phi0, omega));
    let (best, start_loglik, n_starts) = multistart(&objective, &starts, &[0.02, 0.3, 0.03], cfg);
    let params = corr_from_theta(&best.x, mode).ok_or_else(|| Error::Numerical {
        context: "correlation fit",
        detail: "no finite likelihood at any start".into(),
    })?;
    let natural = [params.alpha, params.beta, params.kappa];
    let ll = |x: &[f64]| match CorrDynamicsParams::new(x[0], x[1], x[2], mode) {
        Ok(p) => corr_filter(z, &p, phi0, &filter).map_or(f64::NEG_INFINITY, |path| corr_loglik(z, &path)),
        Err(_) => f64::NEG_INFINITY,
    };
    let se = standard_errors(&hessian(ll, &natural, &hessian_steps(&natural, 1)));
    let persistence = params.persistence();
    Ok(CorrFit {
        params,
        se,
        phi0,
        loglik: -best.f,
        optim: report(&best, start_loglik, n_starts),
        persistence,
        near_boundary: params.beta.abs() >= BOUNDARY_FLAG || persistence >= BOUNDARY_FLAG,
    })
}

/// Fit both steps to a `T × n` return panel.
pub fn fit_two_step(panel: &MultivariateSample, cfg: &FitConfig) -> Result<TwoStepFit> {
    let n = panel.dim();
    let t = panel.len();
    if cfg.kind == ModelKind::Bivariate && n != 2 {
        return Err(Error::Dimension(format!("bivariate mode needs 2 columns, got {n}")));
    }
    if t < cfg.min_t {
        return Err(Error::Dimension(format!("need T ≥ {}, got {t}", cfg.min_t)));
    }
    let columns: Vec<Vec<f64>> = (0..n).map(|j| panel.column(j)).collect();
    let assets: Vec<AssetFit> = columns
        .par_iter()
        .enumerate()
        .map(|(j, c)| {
            fit_egarch(c, None, cfg.optimizer).map_err(|e| match e {
                Error::ZeroDispersion { .. } => Error::ZeroDispersion { column: j },
                e => e,
            })
        })
        .collect::<Result<_>>()?;

    let mut h = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for (c, a) in columns.iter().zip(&assets) {
        let path = egarch_filter(c, &a.params, a.mu, a.h0)?;
        h.push(path.h);
        z.push(path.z);
    }
    let zpanel = MultivariateSample::from_row_major(n, (0..t).flat_map(|i| z.iter().map(move |col| col[i])).collect())?;
    let corr = fit_correlation(&zpanel, cfg.kind, None, None, cfg.filter, cfg.optimizer)?;
    let path = corr_filter(&zpanel, &corr.params, corr.phi0, &cfg.filter)?;
    let loglik = assets.iter().map(|a| a.loglik).sum::<f64>() + corr.loglik;
    let converged = corr.optim.converged && assets.iter().all(|a| a.optim.converged);
    Ok(TwoStepFit {
        assets,
        corr,
        paths: FilteredPaths {
            h,
            z,
            phi: path.phi,
            rho: path.rho,
            degenerate_rows: path.degenerate_rows,
        },
        loglik,
        converged,
    })
}
