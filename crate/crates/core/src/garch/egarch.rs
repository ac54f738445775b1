//! EGARCH(1,1) conditional variances.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::Serialize;

use crate::error::{Error, Result};

/// `E|z|` for a standard normal.
pub fn gaussian_abs_mean() -> f64 {
    FRAC_2_PI.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EgarchParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub eta: f64,
}

impl EgarchParams {
    pub fn new(alpha: f64, beta: f64, kappa: f64, eta: f64) -> Result<Self> {
        let checks = [
            ("EGARCH α must be finite", alpha),
            ("EGARCH κ must be finite", kappa),
            ("EGARCH η must be finite", eta),
        ];
        if let Some(&(what, v)) = checks.iter().find(|c| !c.1.is_finite()) {
            return Err(Error::domain(what, v));
        }
        if !(beta.abs() < 1.0) {
            return Err(Error::domain("EGARCH needs |β| < 1", beta));
        }
        Ok(EgarchParams { alpha, beta, kappa, eta })
    }

    /// Unconditional mean of `log h`.
    pub fn mean_log_variance(&self) -> f64 {
        self.alpha / (1.0 - self.beta)
    }

    fn news(&self, z: f64) -> f64 {
        self.kappa * (z + self.eta * (z.abs() - gaussian_abs_mean()))
    }

    fn next_log_h(&self, log_h: f64, z: f64) -> f64 {
        self.alpha + self.beta * log_h + self.news(z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgarchPath {
    pub h: Vec<f64>,
    pub z: Vec<f64>,
}

/// `log h_t = α + β log h_{t−1} + κ(z_{t−1} + η(|z_{t−1}| − √(2/π)))` from
/// `h_0 = h0`, with `z_t = (r_t − μ)/√h_t`.
pub fn egarch_filter(returns: &[f64], params: &EgarchParams, mu: f64, h0: f64) -> Result<EgarchPath> {
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::domain("initial variance must be positive", h0));
    }
    let params = EgarchParams::new(params.alpha, params.beta, params.kappa, params.eta)?;
    let mut h = Vec::with_capacity(returns.len());
    let mut z = Vec::with_capacity(returns.len());
    let mut log_h = h0.ln();
    for (t, &r) in returns.iter().enumerate() {
        if t > 0 {
            log_h = params.next_log_h(log_h, z[t - 1]);
        }
        let ht = log_h.exp();
        let zt = (r - mu) / ht.sqrt();
        if !(ht > 0.0 && ht.is_finite() && zt.is_finite()) {
            return Err(Error::Numerical {
                context: "EGARCH filter",
                detail: format!("non-finite state at index {t}: h = {ht:e}, z = {zt:e}"),
            });
        }
        h.push(ht);
        z.push(zt);
    }
    Ok(EgarchPath { h, z })
}

/// Gaussian quasi log-likelihood, `−∞` when the filter breaks down.
pub fn egarch_loglik(returns: &[f64], params: &EgarchParams, mu: f64, h0: f64) -> f64 {
    let Ok(params) = EgarchParams::new(params.alpha, params.beta, params.kappa, params.eta) else {
        return f64::NEG_INFINITY;
    };
    let ln2pi = (2.0 * PI).ln();
    let mut log_h = h0.ln();
    let mut z_prev = 0.0;
    let mut ll = 0.0;
    for (t, &r) in returns.iter().enumerate() {
        if t > 0 {
            log_h = params.next_log_h(log_h, z_prev);
        }
        let z = (r - mu) * (-0.5 * log_h).exp();
        ll -= 0.5 * (ln2pi + log_h + z * z);
        z_prev = z;
    }
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_parameters() {
        let p = EgarchParams::new(0.0, 0.0, 0.0, 0.3).unwrap();
        let r = [0.5, -1.0, 2.0];
        let path = egarch_filter(&r, &p, 0.25, 1.0).unwrap();
        assert_eq!(path.h, vec![1.0; 3]);
        assert_eq!(path.z, vec![0.25, -1.25, 1.75]);
    }

    #[test]
    fn geometric_decay() {
        let p = EgarchParams::new(0.0, 0.5, 0.0, 0.0).unwrap();
        let path = egarch_filter(&[0.1; 6], &p, 0.0, 2.0f64.exp()).unwrap();
        for (t, h) in path.h.iter().enumerate() {
            assert!((h.ln() - 2.0 * 0.5f64.powi(t as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn likelihood_matches_path() {
        let p = EgarchParams::new(-0.05, 0.9, 0.1, 0.5).unwrap();
        let r = [0.3, -1.2, 0.8, 2.5, -0.1];
        let path = egarch_filter(&r, &p, 0.1, 0.8).unwrap();
        let want: f64 = path
            .h
            .iter()
            .zip(&path.z)
            .map(|(h, z)| -0.5 * ((2.0 * PI).ln() + h.ln() + z * z))
            .sum();
        assert!((egarch_loglik(&r, &p, 0.1, 0.8) - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(EgarchParams::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(EgarchParams::new(f64::NAN, 0.5, 0.0, 0.0).is_err());
        let p = EgarchParams::new(0.0, 0.5, 0.0, 0.0).unwrap();
        assert!(egarch_filter(&[1.0], &p, 0.0, 0.0).is_err());
        let err = egarch_filter(&[1.0, f64::INFINITY], &p, 0.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("index 1"));
    }
}
