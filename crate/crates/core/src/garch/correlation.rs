//! Correlation recursions driven by the similarity innovation, and the
//! Gaussian likelihood of the standardized residuals.

use std::f64::consts::PI;

use serde::Serialize;

use crate::distributions::omega_n;
use crate::error::{Error, Result};
use crate::sample::Panel;
use crate::similarity::{equicorr_phi_inverse, inverse_fisher, phi_r_bivariate, phi_r_multivariate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CorrMode {
    Bivariate,
    Deco { n: usize },
}

impl CorrMode {
    pub fn dim(self) -> usize {
        match self {
            CorrMode::Bivariate => 2,
            CorrMode::Deco { n } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrDynamicsParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub mode: CorrMode,
}

impl CorrDynamicsParams {
    pub fn new(alpha: f64, beta: f64, kappa: f64, mode: CorrMode) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::domain("correlation α must be finite", alpha));
        }
        if !kappa.is_finite() {
            return Err(Error::domain("correlation κ must be finite", kappa));
        }
        if !(beta.abs() < 1.0) {
            return Err(Error::domain("correlation dynamics need |β| < 1", beta));
        }
        if let CorrMode::Deco { n } = mode {
            if n < 2 {
                return Err(Error::Dimension(format!("DECO needs n ≥ 2, got {n}")));
            }
        }
        Ok(CorrDynamicsParams { alpha, beta, kappa, mode })
    }

    /// Slope of the mean recursion; `E φ_r` moves one-for-one with the state.
    pub fn persistence(&self) -> f64 {
        self.beta + self.kappa
    }

    /// Stationary mean of `φ_t`, `(α − κω_n)/(1 − β − κ)`; `None` without
    /// mean reversion.
    pub fn unconditional_phi(&self) -> Option<f64> {
        let omega = omega_n(self.mode.dim()).ok()?;
        (self.persistence() < 1.0).then(|| (self.alpha - self.kappa * omega) / (1.0 - self.persistence()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FilterOptions {
    /// Clamp `|φ_r|` at this bound before it enters the recursion.
    pub winsorize: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrPath {
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    /// Rows whose innovation was replaced by 0.
    pub degenerate_rows: Vec<usize>,
}

fn run_filter<P: Panel>(
    z: &P,
    params: &CorrDynamicsParams,
    phi0: f64,
    opts: &FilterOptions,
    innovation: impl Fn(&[f64]) -> Result<f64>,
    link: impl Fn(f64) -> Result<f64>,
) -> Result<CorrPath> {
    let params = CorrDynamicsParams::new(params.alpha, params.beta, params.kappa, params.mode)?;
    if !phi0.is_finite() {
        return Err(Error::domain("initial state must be finite", phi0));
    }
    let t_len = z.len();
    let mut phi = Vec::with_capacity(t_len);
    let mut rho = Vec::with_capacity(t_len);
    let mut degenerate_rows = Vec::new();
    let mut state = phi0;
    for t in 0..t_len {
        if t > 0 {
            let r = match innovation(z.row(t - 1)) {
                Ok(v) => v,
                Err(Error::Degenerate { .. }) => {
                    degenerate_rows.push(t - 1);
                    0.0
                }
                Err(e) => return Err(e),
            };
            let r = match opts.winsorize {
                Some(c) => r.clamp(-c, c),
                None => r,
            };
            state = params.alpha + params.beta * state + params.kappa * r;
        }
        phi.push(state);
        rho.push(link(state)?);
    }
    Ok(CorrPath {
        phi,
        rho,
        degenerate_rows,
    })
}

/// `φ_t = α + β φ_{t−1} + κ φ_r(z_{t−1})`, `ρ_t = tanh φ_t`.
pub fn bivariate_corr_filter<P: Panel>(z: &P, params: &CorrDynamicsParams, phi0: f64, opts: &FilterOptions) -> Result<CorrPath> {
    if z.dim() != 2 {
        return Err(Error::Dimension(format!("bivariate filter needs 2 columns, got {}", z.dim())));
    }
    run_filter(z, params, phi0, opts, |r| phi_r_bivariate(r[0], r[1]), inverse_fisher)
}

/// DECO recursion with the multivariate similarity; `ρ_t` is the
/// equicorrelation implied by `φ_t`.
pub fn deco_corr_filter<P: Panel>(z: &P, params: &CorrDynamicsParams, phi0: f64, opts: &FilterOptions) -> Result<CorrPath> {
    let n = z.dim();
    run_filter(z, params, phi0, opts, phi_r_multivariate, |p| equicorr_phi_inverse(p, n))
}

/// `ln det` of an equicorrelation matrix, `(n−1) ln(1−ρ) + ln(1+(n−1)ρ)`.
pub fn equicorr_log_det(rho: f64, n: usize) -> f64 {
    let m = n as f64 - 1.0;
    m * (-rho).ln_1p() + (m * rho).ln_1p()
}

/// `z′C⁻¹z` with `C⁻¹ = (1/(1−ρ))[I − ρ/(1+(n−1)ρ) ιι′]`.
pub fn equicorr_quad_form(z: &[f64], rho: f64) -> f64 {
    let n = z.len() as f64;
    let ss: f64 = z.iter().map(|v| v * v).sum();
    let s: f64 = z.iter().sum();
    (ss - rho / (1.0 + (n - 1.0) * rho) * s * s) / (1.0 - rho)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Gaussian log-density of `z` under the equicorrelation matrix whose
/// similarity is `φ`. Eigenvalues are `n e^{nφ}/(e^{nφ}+n−1)` on `ι` and
/// `n/(e^{nφ}+n−1)` on its complement, which stays finite for any `φ`.
pub fn equicorr_gaussian_logpdf(z: &[f64], phi: f64) -> f64 {
    let n = z.len();
    let nf = n as f64;
    let x = nf * phi;
    let ln_sum = if n == 2 { log_add_exp(x, 0.0) } else { log_add_exp(x, (nf - 1.0).ln()) };
    let ln_lambda_minus = nf.ln() - ln_sum;
    let ln_lambda_plus = ln_lambda_minus + x;
    let mean = z.iter().sum::<f64>() / nf;
    let along = nf * mean * mean;
    let across: f64 = z.iter().map(|v| (v - mean) * (v - mean)).sum();
    let weighted = |q: f64, ln_lambda: f64| if q == 0.0 { 0.0 } else { q * (-ln_lambda).exp() };
    let quad = weighted(along, ln_lambda_plus) + weighted(across, ln_lambda_minus);
    let log_det = ln_lambda_plus + (nf - 1.0) * ln_lambda_minus;
    -0.5 * (nf * (2.0 * PI).ln() + log_det + quad)
}

/// Stage-two log-likelihood of the standardized panel along a filtered path.
pub fn corr_loglik<P: Panel>(z: &P, path: &CorrPath) -> f64 {
    let ll: f64 = (0..z.len()).map(|t| equicorr_gaussian_logpdf(z.row(t), path.phi[t])).sum();
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

/// Filter with the mode's recursion.
pub fn corr_filter<P: Panel>(z: &P, params: &CorrDynamicsParams, phi0: f64, opts: &FilterOptions) -> Result<CorrPath> {
    match params.mode {
        CorrMode::Bivariate => bivariate_corr_filter(z, params, phi0, opts),
        CorrMode::Deco { n } => {
            if z.dim() != n {
                return Err(Error::Dimension(format!("DECO with n = {n} on {} columns", z.dim())));
            }
            deco_corr_filter(z, params, phi0, opts)
        }
    }
}
