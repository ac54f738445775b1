//! Interval estimation of correlations from the similarity estimator, and a
//! test of zero correlation.
//!
//! On the Fisher scale the bivariate interval is `γ̂ ± q · (π/2)/√T`, with `q`
//! an exact finite-`T` quantile or a normal quantile. Endpoints are mapped
//! back with `tanh`. For `n > 2` the bias-corrected estimator `γ̂ + ω_n` and the
//! equicorrelation map are used instead.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::distributions::{logistic_beta_variance, EquicorrFiniteLaw, FiniteSampleLaw};
use crate::error::{Error, Result};
use crate::sample::{MultivariateSample, Panel};
use crate::similarity::{equicorr_phi_inverse, gamma_hat, gamma_hat_bias_corrected, SimilarityEstimate};
use crate::special::{normal_cdf, normal_quantile};

/// Largest `T` for which the exact law is the default.
pub const EXACT_LAW_MAX_T: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    ExactT,
    Asymptotic,
}

impl Law {
    pub fn default_for(t: usize) -> Law {
        if t <= EXACT_LAW_MAX_T {
            Law::ExactT
        } else {
            Law::Asymptotic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Rho,
    Xi,
}

/// How the data were scaled before estimation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMethod {
    /// Root mean square of each column.
    SampleStdev,
    /// Known scales, one per column.
    External(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Caveat {
    /// Interval targets the resemblance coefficient; it is conservative for ρ.
    ConservativeForRho,
    /// Columns were standardized by a non-robust sample scale, so variance
    /// homogeneity, and hence exactness, is only approximate.
    ApproximatelyExact,
    /// Finite-T equicorrelation law built from the Logistic-Beta CF.
    MultivariateExactExtension,
}

/// Divide each column by its scale. The sample-stdev scale is the root mean
/// square, matching the zero-mean convention.
pub fn standardize<P: Panel>(sample: &P, method: &ScaleMethod) -> Result<MultivariateSample> {
    let n = sample.dim();
    let scales: Vec<f64> = match method {
        ScaleMethod::SampleStdev => (0..n)
            .map(|j| {
                let ms = sample.rows().map(|r| r[j] * r[j]).sum::<f64>() / sample.len() as f64;
                ms.sqrt()
            })
            .collect(),
        ScaleMethod::External(s) => {
            if s.len() != n {
                return Err(Error::Dimension(format!("{} scales for {n} columns", s.len())));
            }
            s.clone()
        }
    };
    if let Some(j) = scales.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::ZeroDispersion { column: j });
    }
    let data = sample
        .rows()
        .flat_map(|r| r.iter().zip(&scales).map(|(v, s)| v / s).collect::<Vec<_>>())
        .collect();
    MultivariateSample::from_row_major(n, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CiOptions {
    pub level: f64,
    /// `None` selects [`Law::default_for`].
    pub law: Option<Law>,
    pub target: Target,
    /// Scaling applied to the data beforehand, if any; only used for labelling.
    pub standardization: Option<ScaleMethod>,
}

impl CiOptions {
    pub fn new(level: f64) -> Self {
        CiOptions {
            level,
            law: None,
            target: Target::Rho,
            standardization: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub fisher_lower: f64,
    pub fisher_upper: f64,
    /// Point estimate on the correlation scale.
    pub point: f64,
    pub estimate: SimilarityEstimate,
    pub law: Law,
    pub target: Target,
    pub caveats: Vec<Caveat>,
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain("confidence level must lie in (0, 1)", level));
    }
    Ok(())
}

/// Confidence interval for the correlation (or resemblance coefficient).
pub fn correlation_ci<P: Panel>(sample: &P, opts: &CiOptions) -> Result<ConfidenceInterval> {
    check_level(opts.level)?;
    let n = sample.dim();
    let t = sample.len();
    let law = opts.law.unwrap_or_else(|| Law::default_for(t));
    let mut caveats = Vec::new();
    if opts.target == Target::Xi {
        if n != 2 {
            return Err(Error::Dimension("the ξ target is bivariate".into()));
        }
        caveats.push(Caveat::ConservativeForRho);
    }
    if opts.target == Target::Rho && opts.standardization == Some(ScaleMethod::SampleStdev) {
        caveats.push(Caveat::ApproximatelyExact);
    }
    let upper_p = 0.5 * (1.0 + opts.level);
    let lower_p = 0.5 * (1.0 - opts.level);

    let (estimate, fisher_lower, fisher_upper, point, lower, upper) = if n == 2 {
        let est = gamma_hat(sample)?;
        let q = match law {
            Law::ExactT => FiniteSampleLaw::new(t)?.quantile(upper_p)?,
            Law::Asymptotic => normal_quantile(upper_p),
        };
        let half = q * FRAC_PI_2 / (t as f64).sqrt();
        let (lo, hi) = (est.gamma_hat - half, est.gamma_hat + half);
        (est, lo, hi, est.gamma_hat.tanh(), lo.tanh(), hi.tanh())
    } else {
        let rows: Vec<f64> = sample.rows().flat_map(|r| r.iter().copied()).collect();
        let est = gamma_hat_bias_corrected(&MultivariateSample::from_row_major(n, rows)?)?;
        let s = (logistic_beta_variance(n)? / t as f64).sqrt();
        let (q_lo, q_hi) = match law {
            Law::ExactT => {
                caveats.push(Caveat::MultivariateExactExtension);
                let l = EquicorrFiniteLaw::new(n, t)?;
                (l.quantile(lower_p)?, l.quantile(upper_p)?)
            }
            Law::Asymptotic => (normal_quantile(lower_p), normal_quantile(upper_p)),
        };
        // z = (γ̂ + ω_n − φ_ρ)/s, so φ_ρ ∈ [γ̂ + ω_n − q_hi s, γ̂ + ω_n − q_lo s]
        let (lo, hi) = (est.gamma_hat - q_hi * s, est.gamma_hat - q_lo * s);
        (
            est,
            lo,
            hi,
            equicorr_phi_inverse(est.gamma_hat, n)?,
            equicorr_phi_inverse(lo, n)?,
            equicorr_phi_inverse(hi, n)?,
        )
    };
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: opts.level,
        fisher_lower,
        fisher_upper,
        point,
        estimate,
        law,
        target: opts.target,
        caveats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCorrelationTest {
    /// Standardized statistic under the null.
    pub statistic: f64,
    pub p_value: f64,
    pub level: f64,
    pub reject: bool,
    pub law: Law,
    pub estimate: SimilarityEstimate,
}

/// Two-sided test of `ρ = 0`. For bivariate data the statistic is
/// `z = √T γ̂/(π/2)` with p-value `2(1 − F_T(|z|))`.
pub fn zero_correlation_test<P: Panel>(sample: &P, level: f64, law: Option<Law>) -> Result<ZeroCorrelationTest> {
    check_level(level)?;
    let n = sample.dim();
    let t = sample.len();
    let law = law.unwrap_or_else(|| Law::default_for(t));
    let (estimate, statistic, p_value) = if n == 2 {
        let est = gamma_hat(sample)?;
        let z = est.gamma_hat * (t as f64).sqrt() / FRAC_PI_2;
        let tail = match law {
            Law::ExactT => FiniteSampleLaw::new(t)?.cdf(-z.abs())?,
            Law::Asymptotic => normal_cdf(-z.abs()),
        };
        (est, z, (2.0 * tail).min(1.0))
    } else {
        let rows: Vec<f64> = sample.rows().flat_map(|r| r.iter().copied()).collect();
        let est = gamma_hat_bias_corrected(&MultivariateSample::from_row_major(n, rows)?)?;
        let z = est.gamma_hat * (t as f64 / logistic_beta_variance(n)?).sqrt();
        let f = match law {
            Law::ExactT => EquicorrFiniteLaw::new(n, t)?.cdf(z)?,
            Law::Asymptotic => normal_cdf(z),
        };
        (est, z, (2.0 * f.min(1.0 - f)).min(1.0))
    };
    Ok(ZeroCorrelationTest {
        statistic,
        p_value,
        level,
        reject: p_value < 1.0 - level,
        law,
        estimate,
    })
}
