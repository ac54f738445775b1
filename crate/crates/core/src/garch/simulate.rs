//! Draw return panels from the model itself.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::Serialize;

use super::correlation::{CorrDynamicsParams, CorrMode};
use super::egarch::{gaussian_abs_mean, EgarchParams};
use crate::error::{Error, Result};
use crate::sample::MultivariateSample;
use crate::similarity::{equicorr_phi_inverse, phi_r_bivariate, phi_r_multivariate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "innovations", rename_all = "kebab-case")]
pub enum Innovations {
    Gaussian,
    /// Multivariate t rescaled to unit variance; needs `ν > 2`.
    StudentT { nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub mu: Vec<f64>,
    pub egarch: Vec<EgarchParams>,
    pub corr: CorrDynamicsParams,
    pub innovations: Innovations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedModel {
    pub returns: MultivariateSample,
    pub z: MultivariateSample,
    /// Conditional variances, one vector per asset.
    pub h: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Draw `z ~ N(0, C)` with `C` the equicorrelation matrix of similarity `φ`,
/// using `C^{1/2} g = √λ₋ (g − ḡι) + √λ₊ ḡι`.
fn correlated_draw<R: Rng + ?Sized>(phi: f64, n: usize, rng: &mut R, out: &mut [f64]) {
    let nf = n as f64;
    let x = nf * phi;
    // λ₋ = n/(e^{x}+n−1), λ₊ = λ₋ e^{x}, evaluated without overflow
    let ln_sum = if x > 0.0 { x + (1.0 + (nf - 1.0) * (-x).exp()).ln() } else { (x.exp() + nf - 1.0).ln() };
    let ln_minus = nf.ln() - ln_sum;
    let s_minus = (0.5 * ln_minus).exp();
    let s_plus = (0.5 * (ln_minus + x)).exp();
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let mean = out.iter().sum::<f64>() / nf;
    for v in out.iter_mut() {
        *v = s_minus * (*v - mean) + s_plus * mean;
    }
}

/// Simulate `t` observations after discarding `burn_in`. States start at
/// their unconditional means.
pub fn simulate_model<R: Rng + ?Sized>(spec: &ModelSpec, t: usize, burn_in: usize, rng: &mut R) -> Result<SimulatedModel> {
    let n = spec.corr.mode.dim();
    if spec.mu.len() != n || spec.egarch.len() != n {
        return Err(Error::Dimension(format!(
            "{} means and {} EGARCH specs for {n} assets",
            spec.mu.len(),
            spec.egarch.len()
        )));
    }
    let scale_t = match spec.innovations {
        Innovations::Gaussian => None,
        Innovations::StudentT { nu } => {
            if !(nu > 2.0 && nu.is_finite()) {
                return Err(Error::domain("unit-variance t innovations need ν > 2", nu));
            }
            Some((nu, ChiSquared::new(nu).expect("validated")))
        }
    };
    let corr = spec.corr;
    let mut phi = corr.unconditional_phi().unwrap_or(corr.alpha);
    let mut log_h: Vec<f64> = spec.egarch.iter().map(|p| p.mean_log_variance()).collect();
    let total = burn_in + t;

    let mut returns = Vec::with_capacity(t * n);
    let mut zs = Vec::with_capacity(t * n);
    let mut h_paths = vec![Vec::with_capacity(t); n];
    let mut phi_path = Vec::with_capacity(t);
    let mut rho_path = Vec::with_capacity(t);
    let mut z = vec![0.0; n];
    for step in 0..total {
        if step > 0 {
            let innovation = match corr.mode {
                CorrMode::Bivariate => phi_r_bivariate(z[0], z[1]),
                CorrMode::Deco { .. } => phi_r_multivariate(&z),
            };
            let r = innovation.unwrap_or(0.0);
            phi = corr.alpha + corr.beta * phi + corr.kappa * r;
            for (lh, (p, zi)) in log_h.iter_mut().zip(spec.egarch.iter().zip(&z)) {
                *lh = p.alpha + p.beta * *lh + p.kappa * (zi + p.eta * (zi.abs() - gaussian_abs_mean()));
            }
        }
        correlated_draw(phi, n, rng, &mut z);
        if let Some((nu, chi)) = &scale_t {
            let w: f64 = chi.sample(rng);
            let c = ((nu - 2.0) / w).sqrt();
            z.iter_mut().for_each(|v| *v *= c);
        }
        if !phi.is_finite() || log_h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                context: "model simulation",
                detail: format!("state diverged at step {step}"),
            });
        }
        if step >= burn_in {
            let rho = match corr.mode {
                CorrMode::Bivariate => phi.tanh(),
                CorrMode::Deco { n } => equicorr_phi_inverse(phi, n)?,
            };
            for i in 0..n {
                let h = log_h[i].exp();
                h_paths[i].push(h);
                zs.push(z[i]);
                returns.push(spec.mu[i] + h.sqrt() * z[i]);
            }
            phi_path.push(phi);
            rho_path.push(rho);
        }
    }
    Ok(SimulatedModel {
        returns: MultivariateSample::from_row_major(n, returns)?,
        z: MultivariateSample::from_row_major(n, zs)?,
        h: h_paths,
        phi: phi_path,
        rho: rho_path,
    })
}
