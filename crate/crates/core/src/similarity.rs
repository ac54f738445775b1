//! The similarity measure `φ_r`, the estimator `γ̂` and the parameter maps
//! between correlations and the Fisher (log-matrix) scale.

use crate::distributions::omega_n;
use crate::error::{DegenerateLocus, Error, Result};
use crate::sample::{MultivariateSample, Panel};

/// Dimension up to which the orthogonal quadratic form is evaluated from
/// pairwise differences, which is free of cancellation.
const PAIRWISE_MAX_DIM: usize = 16;

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Fisher transformation `½ log((1+ρ)/(1−ρ))`.
pub fn fisher(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain("fisher transform needs |ρ| < 1", rho));
    }
    Ok(rho.atanh())
}

/// Inverse Fisher transformation, `tanh(g)`.
pub fn inverse_fisher(g: f64) -> Result<f64> {
    if !g.is_finite() {
        return Err(Error::domain("inverse fisher transform needs a finite argument", g));
    }
    Ok(g.tanh())
}

/// Power of two bringing `max |x|` near one, so rescaling is exact.
fn exact_rescale(max_abs: f64) -> f64 {
    if max_abs > 2f64.powi(400) || max_abs < 2f64.powi(-400) {
        2f64.powi(-(max_abs.log2().floor() as i32))
    } else {
        1.0
    }
}

/// Per-observation similarity `½ log((x1+x2)²/(x1−x2)²)`.
pub fn phi_r_bivariate(x1: f64, x2: f64) -> Result<f64> {
    if x1 == 0.0 && x2 == 0.0 {
        return Err(Error::Degenerate {
            row: None,
            locus: DegenerateLocus::Origin,
        });
    }
    if x1 == x2 {
        return Err(Error::Degenerate {
            row: None,
            locus: DegenerateLocus::Sum,
        });
    }
    if x1 == -x2 {
        return Err(Error::Degenerate {
            row: None,
            locus: DegenerateLocus::Difference,
        });
    }
    let c = exact_rescale(x1.abs().max(x2.abs()));
    let (a, b) = (x1 * c, x2 * c);
    // one logarithm of the ratio: exact rescalings of the row give identical bits
    Ok(((a + b) / (a - b)).abs().ln())
}

/// Multivariate similarity `(1/n) log(x′P_n x / x′P_n^⊥ x)` with `P_n` the
/// projection onto the vector of ones.
pub fn phi_r_multivariate(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Dimension(format!("need n ≥ 2, got {n}")));
    }
    let max_abs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Err(Error::Degenerate {
            row: None,
            locus: DegenerateLocus::Origin,
        });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::Degenerate {
            row: None,
            locus: DegenerateLocus::Sum,
        });
    }
    let c = exact_rescale(max_abs);
    let y: Vec<f64> = x.iter().map(|v| v * c).collect();
    let s = neumaier_sum(y.iter().copied());
    if s == 0.0 {
        return Err(Error::Degenerate {
            row: None,
            locus: DegenerateLocus::Difference,
        });
    }
    let nf = n as f64;
    // ln(n · x′P⊥x)
    let ln_n_perp = if n <= PAIRWISE_MAX_DIM {
        let mut pair = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = y[i] - y[j];
                pair.push(d * d);
            }
        }
        neumaier_sum(pair).ln()
    } else {
        let mean = s / nf;
        let dev: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let ss = neumaier_sum(dev.iter().map(|d| d * d));
        let corr = neumaier_sum(dev.iter().copied());
        (nf * (ss - corr * corr / nf)).ln()
    };
    // x′P x = s²/n, so the ratio is s² / (n · x′P⊥x)
    Ok((2.0 * s.abs().ln() - ln_n_perp) / nf)
}

/// The similarity estimator together with its sample metadata.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SimilarityEstimate {
    /// Estimate on the Fisher scale.
    pub gamma_hat: f64,
    /// Uncorrected mean of `φ_{r,t}`.
    pub raw_mean: f64,
    pub t: usize,
    pub n: usize,
    pub bias_corrected: bool,
}

/// φ_r of each row of a panel, with row indices attached to failures.
pub fn phi_r_series<P: Panel>(sample: &P) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let bivariate = sample.dim() == 2;
    sample
        .rows()
        .enumerate()
        .map(|(t, r)| {
            let v = if bivariate {
                phi_r_bivariate(r[0], r[1])
            } else {
                phi_r_multivariate(r)
            };
            v.map_err(|e| e.at_row(t))
        })
        .collect()
}

/// Mean of the per-observation similarities. Data are assumed zero-mean.
pub fn gamma_hat<P: Panel>(sample: &P) -> Result<SimilarityEstimate> {
    let phis = phi_r_series(sample)?;
    let mean = neumaier_sum(phis.iter().copied()) / phis.len() as f64;
    Ok(SimilarityEstimate {
        gamma_hat: mean,
        raw_mean: mean,
        t: sample.len(),
        n: sample.dim(),
        bias_corrected: false,
    })
}

/// `γ̂ + ω_n`, consistent for the equicorrelation parameter `φ_ρ`.
pub fn gamma_hat_bias_corrected(sample: &MultivariateSample) -> Result<SimilarityEstimate> {
    let est = gamma_hat(sample)?;
    let omega = omega_n(est.n)?;
    Ok(SimilarityEstimate {
        gamma_hat: est.raw_mean + omega,
        bias_corrected: true,
        ..est
    })
}

/// Covariance parameters driving the population similarity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum CovarianceSpec {
    Bivariate {
        sigma1_sq: f64,
        sigma2_sq: f64,
        sigma12: f64,
    },
    Equicorrelation {
        sigma_sq: f64,
        rho: f64,
        n: usize,
    },
}

impl CovarianceSpec {
    pub fn bivariate(sigma1_sq: f64, sigma2_sq: f64, sigma12: f64) -> Result<Self> {
        if !(sigma1_sq > 0.0 && sigma1_sq.is_finite()) {
            return Err(Error::domain("σ₁² must be positive", sigma1_sq));
        }
        if !(sigma2_sq > 0.0 && sigma2_sq.is_finite()) {
            return Err(Error::domain("σ₂² must be positive", sigma2_sq));
        }
        if !(sigma12 * sigma12 < sigma1_sq * sigma2_sq) {
            return Err(Error::domain("σ₁₂² must be below σ₁²σ₂²", sigma12));
        }
        Ok(CovarianceSpec::Bivariate {
            sigma1_sq,
            sigma2_sq,
            sigma12,
        })
    }

    pub fn equicorrelation(sigma_sq: f64, rho: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("need n ≥ 2, got {n}")));
        }
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(Error::domain("σ² must be positive", sigma_sq));
        }
        check_equicorr_rho(rho, n)?;
        Ok(CovarianceSpec::Equicorrelation { sigma_sq, rho, n })
    }

    pub fn dim(&self) -> usize {
        match *self {
            CovarianceSpec::Bivariate { .. } => 2,
            CovarianceSpec::Equicorrelation { n, .. } => n,
        }
    }

    /// Pearson correlation.
    pub fn rho(&self) -> f64 {
        match *self {
            CovarianceSpec::Bivariate {
                sigma1_sq,
                sigma2_sq,
                sigma12,
            } => sigma12 / (sigma1_sq * sigma2_sq).sqrt(),
            CovarianceSpec::Equicorrelation { rho, .. } => rho,
        }
    }

    /// Eigenvalues `(λ₊, λ₋)` of an equicorrelation matrix; `λ₋` has multiplicity `n − 1`.
    pub fn equicorr_eigenvalues(&self) -> Option<(f64, f64)> {
        match *self {
            CovarianceSpec::Equicorrelation { sigma_sq, rho, n } => Some((
                sigma_sq * (1.0 + (n as f64 - 1.0) * rho),
                sigma_sq * (1.0 - rho),
            )),
            CovarianceSpec::Bivariate { .. } => None,
        }
    }

    /// Population value of the similarity on the log-matrix scale.
    pub fn phi_rho(&self) -> f64 {
        match *self {
            CovarianceSpec::Bivariate { .. } => self.rho().atanh(),
            CovarianceSpec::Equicorrelation { rho, n, .. } => {
                equicorr_phi(rho, n).expect("validated at construction")
            }
        }
    }

    /// `ϑ = φ₂ − φ₁`, the angle between the directions of `ι₊′A` and `ι₋′A`
    /// where `A` is the lower-triangular factor of the bivariate covariance.
    pub fn angle_gap(&self) -> Option<f64> {
        match *self {
            CovarianceSpec::Bivariate {
                sigma1_sq,
                sigma2_sq,
                sigma12,
            } => {
                let s1 = sigma1_sq.sqrt();
                let s2 = sigma2_sq.sqrt();
                let r = sigma12 / (s1 * s2);
                let off = s2 * (1.0 - r * r).sqrt();
                let phi1 = off.atan2(s1 + sigma12 / s1);
                let phi2 = (-off).atan2(s1 - sigma12 / s1);
                Some(phi2 - phi1)
            }
            CovarianceSpec::Equicorrelation { .. } => None,
        }
    }
}

/// Resemblance coefficient `ξ = 2σ₁₂/(σ₁²+σ₂²)`, the target of `γ̂` (on the
/// Fisher scale) when variances differ.
pub fn resemblance_coefficient(spec: &CovarianceSpec) -> Result<f64> {
    match *spec {
        CovarianceSpec::Bivariate {
            sigma1_sq,
            sigma2_sq,
            sigma12,
        } => {
            // re-validate: the enum is constructible directly
            CovarianceSpec::bivariate(sigma1_sq, sigma2_sq, sigma12)?;
            Ok(2.0 * sigma12 / (sigma1_sq + sigma2_sq))
        }
        CovarianceSpec::Equicorrelation { .. } => Err(Error::Dimension(
            "resemblance coefficient is defined for bivariate specs".into(),
        )),
    }
}

fn check_equicorr_rho(rho: f64, n: usize) -> Result<()> {
    let lower = -1.0 / (n as f64 - 1.0);
    if !(rho > lower && rho < 1.0) {
        return Err(Error::domain("equicorrelation needs −1/(n−1) < ρ < 1", rho));
    }
    Ok(())
}

/// Off-diagonal element of `log C` for an `n × n` equicorrelation matrix,
/// `(1/n) log((1+(n−1)ρ)/(1−ρ))`.
pub fn equicorr_phi(rho: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Dimension(format!("need n ≥ 2, got {n}")));
    }
    check_equicorr_rho(rho, n)?;
    let nf = n as f64;
    Ok((((nf - 1.0) * rho).ln_1p() - (-rho).ln_1p()) / nf)
}

/// Inverse of [`equicorr_phi`]: `(e^{nφ}−1)/(e^{nφ}+n−1)`.
pub fn equicorr_phi_inverse(phi: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Dimension(format!("need n ≥ 2, got {n}")));
    }
    if !phi.is_finite() {
        return Err(Error::domain("equicorrelation inverse needs a finite argument", phi));
    }
    let nf = n as f64;
    let x = nf * phi;
    if x > 0.0 {
        // divide through by e^{x} to avoid overflow
        let e = (-x).exp();
        Ok((1.0 - e) / (1.0 + (nf - 1.0) * e))
    } else {
        let em1 = x.exp_m1();
        Ok(em1 / (em1 + nf))
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::sample::BivariateSample;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher(0.0).unwrap(), 0.0);
        assert!(close(fisher(0.5).unwrap(), 0.5 * 3f64.ln(), 1e-15));
        assert!(close(fisher(0.5).unwrap(), 0.549306, 1e-6));
        assert_eq!(fisher(-0.5).unwrap(), -fisher(0.5).unwrap());
        assert!(fisher(1.0).is_err());
        assert!(fisher(-1.2).is_err());
        assert!(fisher(f64::NAN).is_err());
    }

    #[test]
    fn inverse_fisher_examples() {
        assert_eq!(inverse_fisher(0.0).unwrap(), 0.0);
        assert!(close(inverse_fisher(0.549306).unwrap(), 0.5, 1e-6));
        let r = inverse_fisher(10.0).unwrap();
        assert!(r < 1.0 && r > 0.999_999_99);
        assert!(inverse_fisher(f64::INFINITY).is_err());
    }

    #[test]
    fn phi_r_bivariate_examples() {
        assert!(close(phi_r_bivariate(1.0, 2.0).unwrap(), 0.5 * 9f64.ln(), 1e-15));
        assert!(close(phi_r_bivariate(1.0, -2.0).unwrap(), -0.5 * 9f64.ln(), 1e-15));
        assert_eq!(
            phi_r_bivariate(1.0, 1.0),
            Err(Error::Degenerate {
                row: None,
                locus: DegenerateLocus::Sum
            })
        );
        assert_eq!(
            phi_r_bivariate(2.0, -2.0),
            Err(Error::Degenerate {
                row: None,
                locus: DegenerateLocus::Difference
            })
        );
        assert_eq!(
            phi_r_bivariate(0.0, 0.0),
            Err(Error::Degenerate {
                row: None,
                locus: DegenerateLocus::Origin
            })
        );
    }

    #[test]
    fn phi_r_handles_extreme_magnitudes() {
        let a = phi_r_bivariate(1e300, 2e300).unwrap();
        let b = phi_r_bivariate(1e-300, 2e-300).unwrap();
        assert!(close(a, 0.5 * 9f64.ln(), 1e-14));
        assert!(close(b, 0.5 * 9f64.ln(), 1e-14));
        let m = phi_r_multivariate(&[2e300, 1e300, 1e300]).unwrap();
        assert!(close(m, 2f64.ln(), 1e-14));
    }

    #[test]
    fn phi_r_multivariate_examples() {
        assert!(close(phi_r_multivariate(&[1.0, 2.0]).unwrap(), 0.5 * 9f64.ln(), 1e-15));
        assert!(matches!(
            phi_r_multivariate(&[1.0, 1.0, 1.0]),
            Err(Error::Degenerate {
                locus: DegenerateLocus::Sum,
                ..
            })
        ));
        assert!(matches!(
            phi_r_multivariate(&[1.0, -2.0, 1.0]),
            Err(Error::Degenerate {
                locus: DegenerateLocus::Difference,
                ..
            })
        ));
        // (1/3) ln((16/3)/(2/3)) = ln 2
        assert!(close(phi_r_multivariate(&[2.0, 1.0, 1.0]).unwrap(), 0.693147, 1e-6));
        assert!(close(phi_r_multivariate(&[2.0, 1.0, 1.0]).unwrap(), 2f64.ln(), 1e-15));
        assert!(phi_r_multivariate(&[1.0]).is_err());
    }

    #[test]
    fn large_dimension_path_matches_pairwise_path() {
        // 20-dimensional vector evaluated through the two-pass branch, compared
        // with the explicit projection quantities.
        let x: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64) - 3.3).collect();
        let n = x.len() as f64;
        let s: f64 = x.iter().sum();
        let pp = s * s / n;
        let mean = s / n;
        let perp: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        let want = (pp / perp).ln() / n;
        assert!(close(phi_r_multivariate(&x).unwrap(), want, 1e-13));
    }

    #[test]
    fn gamma_hat_examples() {
        let s = BivariateSample::new(vec![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(close(gamma_hat(&s).unwrap().gamma_hat, 1.098612, 1e-6));
        let s = BivariateSample::new(vec![[1.0, 2.0], [1.0, -2.0]]).unwrap();
        assert_eq!(gamma_hat(&s).unwrap().gamma_hat, 0.0);
        let s = BivariateSample::new(vec![[1.0, 1.0]]).unwrap();
        assert_eq!(
            gamma_hat(&s),
            Err(Error::Degenerate {
                row: Some(0),
                locus: DegenerateLocus::Sum
            })
        );
        let s = BivariateSample::new(vec![[1.0, 2.0], [3.0, -3.0]]).unwrap();
        assert!(matches!(gamma_hat(&s), Err(Error::Degenerate { row: Some(1), .. })));
    }

    #[test]
    fn bias_corrected_examples() {
        let s = BivariateSample::new(vec![[1.0, 2.0], [0.3, -2.0], [5.0, 4.0]]).unwrap();
        let raw = gamma_hat(&s).unwrap();
        let bc = gamma_hat_bias_corrected(&s.to_multivariate()).unwrap();
        assert_eq!(bc.gamma_hat, raw.gamma_hat);
        assert!(bc.bias_corrected);
        let m = MultivariateSample::new(vec![vec![2.0, 1.0, 1.0], vec![-1.0, 1.0, 0.5]]).unwrap();
        let a = phi_r_multivariate(&[2.0, 1.0, 1.0]).unwrap();
        let b = phi_r_multivariate(&[-1.0, 1.0, 0.5]).unwrap();
        let bc = gamma_hat_bias_corrected(&m).unwrap();
        assert!(close(bc.gamma_hat - bc.raw_mean, 2.0 * 2f64.ln() / 3.0, 1e-12));
        assert!(close(bc.raw_mean, 0.5 * (a + b), 1e-15));
        assert!(close(2.0 * 2f64.ln() / 3.0, 0.462098, 1e-6));
    }

    #[test]
    fn resemblance_examples() {
        let s = CovarianceSpec::bivariate(1.0, 1.0, 0.5).unwrap();
        assert!(close(resemblance_coefficient(&s).unwrap(), 0.5, 1e-15));
        let s = CovarianceSpec::bivariate(1.0, 4.0, 1.2).unwrap();
        assert!(close(resemblance_coefficient(&s).unwrap(), 0.48, 1e-15));
        assert!(close(0.48, (2.0 * 1.0 * 2.0 / 5.0) * s.rho(), 1e-15));
        let s = CovarianceSpec::bivariate(3.0, 4.0, 0.0).unwrap();
        assert_eq!(resemblance_coefficient(&s).unwrap(), 0.0);
        assert!(CovarianceSpec::bivariate(1.0, 1.0, 1.0).is_err());
        assert!(CovarianceSpec::bivariate(0.0, 1.0, 0.0).is_err());
        let raw = CovarianceSpec::Bivariate {
            sigma1_sq: 1.0,
            sigma2_sq: 1.0,
            sigma12: 2.0,
        };
        assert!(resemblance_coefficient(&raw).is_err());
    }

    #[test]
    fn equicorr_phi_examples() {
        for n in [2, 3, 10] {
            assert_eq!(equicorr_phi(0.0, n).unwrap(), 0.0);
        }
        assert!(close(equicorr_phi(0.5, 2).unwrap(), fisher(0.5).unwrap(), 1e-15));
        assert!(close(equicorr_phi(0.5, 3).unwrap(), 4f64.ln() / 3.0, 1e-15));
        assert!(equicorr_phi(-0.5, 3).is_err());
        assert!(equicorr_phi(-0.49, 3).is_ok());
        assert!(equicorr_phi(1.0, 3).is_err());
    }

    #[test]
    fn equicorr_phi_inverse_examples() {
        assert_eq!(equicorr_phi_inverse(0.0, 4).unwrap(), 0.0);
        assert!(close(equicorr_phi_inverse(0.549306, 2).unwrap(), 0.5, 1e-6));
        for n in [2usize, 3, 7] {
            let r = equicorr_phi_inverse(-50.0, n).unwrap();
            let lower = -1.0 / (n as f64 - 1.0);
            assert!(r > lower - 1e-15 && (r - lower).abs() < 1e-12);
            assert!(equicorr_phi_inverse(50.0, n).unwrap() <= 1.0);
        }
        assert!(equicorr_phi_inverse(f64::NAN, 3).is_err());
    }

    #[test]
    fn spec_derived_quantities() {
        let s = CovarianceSpec::equicorrelation(2.0, 0.5, 3).unwrap();
        assert_eq!(s.equicorr_eigenvalues(), Some((4.0, 1.0)));
        assert!(close(s.phi_rho(), 4f64.ln() / 3.0, 1e-15));
        assert!(CovarianceSpec::equicorrelation(1.0, -0.5, 3).is_err());
        // homogeneous variances put ι₊′A and ι₋′A at a right angle
        let h = CovarianceSpec::bivariate(2.0, 2.0, 0.7).unwrap();
        assert!(close(h.angle_gap().unwrap().abs(), std::f64::consts::FRAC_PI_2, 1e-14));
    }
}
