//! Exact sampling laws of the similarity measure and of the estimator `γ̂`.
//!
//! * Bivariate elliptical data with homogeneous variances: `φ_r − φ_ρ` follows
//!   the hyperbolic-secant law with density `(1/π) sech(x)`.
//! * Heterogeneous variances: `φ_r` is centred at `φ_ξ` with variance
//!   [`hetero_variance`].
//! * Equicorrelated `n`-variate data: `−n(φ_r − φ_ρ)` is Logistic-Beta with
//!   shape `(½, (n−1)/2)`, so `E φ_r = φ_ρ − ω_n`.
//!
//! The finite-sample laws of the standardized estimator are obtained by
//! inverting the characteristic function of the `T`-fold mean with the
//! Gil-Pelaez formula.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadConfig};
use crate::similarity::CovarianceSpec;
use crate::special::{digamma, ln_beta, ln_cosh, ln_gamma, ln_gamma_complex, trigamma};

/// `|CF| < e^{-37}` beyond the truncation point.
const CF_TRUNCATION_LOG: f64 = 37.0;

/// Density of the hyperbolic-secant law, `(1/π) sech(x − center)`.
pub fn sech_pdf(x: f64, center: f64) -> f64 {
    let y = (x - center).abs();
    // sech(y) = 2 e^{-y} / (1 + e^{-2y}); underflows cleanly to 0
    let e = (-y).exp();
    2.0 * e / (1.0 + e * e) / PI
}

/// Distribution function `(2/π) arctan(e^{x − center})`.
pub fn sech_cdf(x: f64, center: f64) -> f64 {
    let y = x - center;
    if y > 0.0 {
        1.0 - (2.0 / PI) * (-y).exp().atan()
    } else {
        (2.0 / PI) * y.exp().atan()
    }
}

/// The hyperbolic-secant law centred at `φ_ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SechLaw {
    pub center: f64,
}

impl SechLaw {
    pub fn pdf(&self, x: f64) -> f64 {
        sech_pdf(x, self.center)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        sech_cdf(x, self.center)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(self.center + (FRAC_PI_2 * p).tan().ln())
    }

    pub fn variance(&self) -> f64 {
        PI * PI / 4.0
    }
}

/// Variance of `φ_r` for a bivariate elliptical law with covariance `spec`,
/// `π²/6 − Σ_k cos(2kϑ)/k²`, evaluated in closed form.
pub fn hetero_variance(spec: &CovarianceSpec) -> Result<f64> {
    let CovarianceSpec::Bivariate {
        sigma1_sq,
        sigma2_sq,
        sigma12,
    } = *spec
    else {
        return Err(Error::Dimension("hetero_variance needs a bivariate spec".into()));
    };
    let spec = CovarianceSpec::bivariate(sigma1_sq, sigma2_sq, sigma12)?;
    let gap = spec.angle_gap().expect("bivariate");
    // Σ_{k≥1} cos(kθ)/k² = π²/6 − πθ/2 + θ²/4 on [0, 2π]
    let theta = (2.0 * gap).rem_euclid(2.0 * PI);
    Ok(FRAC_PI_2 * theta - 0.25 * theta * theta)
}

/// Bias `ω_n = (ψ((n−1)/2) − ψ(½))/n` of the multivariate similarity under
/// equicorrelation. Zero for `n = 2`.
pub fn omega_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Dimension(format!("ω_n needs n ≥ 2, got {n}")));
    }
    if n == 2 {
        return Ok(0.0);
    }
    let nf = n as f64;
    Ok((digamma(0.5 * (nf - 1.0)) - digamma(0.5)) / nf)
}

/// Variance of the multivariate similarity, `(ψ′((n−1)/2) + π²/2)/n²`.
pub fn logistic_beta_variance(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Dimension(format!("variance needs n ≥ 2, got {n}")));
    }
    let nf = n as f64;
    Ok((trigamma(0.5 * (nf - 1.0)) + PI * PI / 2.0) / (nf * nf))
}

/// Density of `φ_r` under `n`-variate equicorrelation:
/// `n e^{n(x−c)/2} (1 + e^{n(x−c)})^{−n/2} / B(½, (n−1)/2)`.
pub fn logistic_beta_pdf(x: f64, n: usize, center: f64) -> f64 {
    debug_assert!(n >= 2);
    let nf = n as f64;
    let y = nf * (x - center);
    // ln(1 + e^y), stable for both signs
    let softplus = if y > 0.0 { y + (-y).exp().ln_1p() } else { y.exp().ln_1p() };
    let ln_pdf = nf.ln() - ln_beta(0.5, 0.5 * (nf - 1.0)) + 0.5 * y - 0.5 * nf * softplus;
    ln_pdf.exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticBetaLaw {
    pub n: usize,
    pub center: f64,
}

impl LogisticBetaLaw {
    pub fn new(n: usize, center: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("need n ≥ 2, got {n}")));
        }
        Ok(LogisticBetaLaw { n, center })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        logistic_beta_pdf(x, self.n, self.center)
    }

    pub fn mean(&self) -> f64 {
        self.center - omega_n(self.n).expect("n ≥ 2")
    }

    pub fn variance(&self) -> f64 {
        logistic_beta_variance(self.n).expect("n ≥ 2")
    }
}

/// Characteristic function of the standardized estimator
/// `z = √T (γ̂ − φ_ρ)/(π/2)`: `sech(u/√T)^T`.
pub fn finite_sample_cf(u: f64, t: usize) -> f64 {
    let tf = t as f64;
    (-tf * ln_cosh(u / tf.sqrt())).exp()
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("probability must lie in (0, 1)", p));
    }
    Ok(())
}

/// Breakpoints splitting `[0, u_max]` into panels of at most `width`.
fn panels(u_max: f64, width: f64) -> Vec<f64> {
    let k = (u_max / width).ceil().max(1.0) as usize;
    (0..=k).map(|i| u_max * i as f64 / k as f64).collect()
}

fn integrate_panels<F: Fn(f64) -> f64>(f: F, breaks: &[f64], cfg: QuadConfig) -> Result<f64> {
    let per_panel = QuadConfig {
        abs_tol: cfg.abs_tol / breaks.len() as f64,
        ..cfg
    };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate(&f, w[0], w[1], per_panel)?.value;
    }
    Ok(total)
}

fn quad_config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-14,
        max_intervals: 500,
    }
}

/// Root of a nondecreasing `f` on `[lo, hi]`: bisection to a narrow bracket,
/// then Illinois-modified secant steps that keep the bracket.
pub(crate) fn monotone_root<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::Numerical {
            context: "quantile root bracketing",
            detail: format!("no sign change on [{lo}, {hi}]: f = ({flo:e}, {fhi:e})"),
        });
    }
    while hi - lo > 0.25 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        // the secant point can sit on one end for long; force a halving then
        if hi - lo > tol && (x - lo).min(hi - x) < 0.01 * tol {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid)?;
            if fm < 0.0 {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
        }
    }
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

/// Exact law of the standardized estimator `z = √T (γ̂ − φ_ρ)/(π/2)` for
/// bivariate elliptical data with homogeneous variances.
///
/// Its characteristic function is `sech(u/√T)^T`, which is real and even,
/// so the Gil-Pelaez inversion reduces to a sine integral. The integration
/// range is truncated where the CF drops below `e^{-37}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSampleLaw {
    t: usize,
    u_max: f64,
    cfg: QuadConfig,
}

/// Quantile search interval and tolerance.
pub const QUANTILE_BRACKET: (f64, f64) = (-10.0, 10.0);
pub const QUANTILE_TOL: f64 = 1e-12;

impl FiniteSampleLaw {
    pub fn new(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::Dimension("sample size T must be ≥ 1".into()));
        }
        let tf = t as f64;
        let y = CF_TRUNCATION_LOG / tf;
        // solve T ln cosh(u/√T) = 37
        let x = if y > 20.0 { y + std::f64::consts::LN_2 } else { y.exp().acosh() };
        Ok(FiniteSampleLaw {
            t,
            u_max: tf.sqrt() * x,
            cfg: quad_config(),
        })
    }

    pub fn sample_size(&self) -> usize {
        self.t
    }

    pub fn cf(&self, u: f64) -> f64 {
        finite_sample_cf(u, self.t)
    }

    fn breaks(&self, z: f64) -> Vec<f64> {
        panels(self.u_max, (PI / z.abs().max(1e-3)).min(2.0))
    }

    /// `F(z) = ½ + (1/π) ∫₀^∞ sin(uz) CF(u)/u du`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return if z.is_nan() {
                Err(Error::domain("cdf argument is NaN", z))
            } else {
                Ok(if z > 0.0 { 1.0 } else { 0.0 })
            };
        }
        if z == 0.0 {
            return Ok(0.5);
        }
        let integral = integrate_panels(
            |u| if u == 0.0 { z } else { (u * z).sin() * self.cf(u) / u },
            &self.breaks(z),
            self.cfg,
        )?;
        Ok((0.5 + integral / PI).clamp(0.0, 1.0))
    }

    /// `f(z) = (1/π) ∫₀^∞ cos(uz) CF(u) du`.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        let integral = integrate_panels(|u| (u * z).cos() * self.cf(u), &self.breaks(z), self.cfg)?;
        Ok((integral / PI).max(0.0))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        if p == 0.5 {
            return Ok(0.0);
        }
        let (lo, hi) = QUANTILE_BRACKET;
        monotone_root(|z| Ok(self.cdf(z)? - p), lo, hi, QUANTILE_TOL)
    }
}

/// `P(z ≤ z)` for the standardized estimator with `T` observations.
pub fn finite_sample_cdf(z: f64, t: usize) -> Result<f64> {
    FiniteSampleLaw::new(t)?.cdf(z)
}

/// Critical value of `√T (γ̂ − φ_ρ)/(π/2)` at probability `p`.
pub fn finite_sample_quantile(p: f64, t: usize) -> Result<f64> {
    check_probability(p)?;
    FiniteSampleLaw::new(t)?.quantile(p)
}

/// Sample sizes of the standard critical-value table.
pub const TABLE_SAMPLE_SIZES: [usize; 36] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 30, 35, 40, 45, 50, 55, 60,
    70, 80, 90, 100,
];

/// Probability levels of the standard critical-value table.
pub const TABLE_PROBABILITIES: [f64; 11] = [0.90, 0.95, 0.96, 0.97, 0.975, 0.98, 0.985, 0.99, 0.995, 0.9975, 0.9995];

/// Exact quantiles `q[i][j]` for sample size `ts[i]` and level `ps[j]`.
pub fn quantile_table(ts: &[usize], ps: &[f64]) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    for &p in ps {
        check_probability(p)?;
    }
    ts.par_iter()
        .map(|&t| {
            let law = FiniteSampleLaw::new(t)?;
            ps.iter().map(|&p| law.quantile(p)).collect()
        })
        .collect()
}

/// Exact law of `z = √T (γ̂ + ω_n − φ_ρ)/√V_n` for equicorrelated
/// `n`-variate elliptical data, `V_n` being [`logistic_beta_variance`].
///
/// The CF of a single centred observation follows from the Logistic-Beta
/// moment generating function continued to the imaginary axis,
/// `e^{isω_n} Γ((n−1)/2 − is/n) Γ(½ + is/n) / (Γ((n−1)/2) Γ(½))`.
/// The law is skewed for `n > 2`; for `n = 2` it coincides with
/// [`FiniteSampleLaw`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquicorrFiniteLaw {
    n: usize,
    t: usize,
    omega: f64,
    sd: f64,
    ln_norm: f64,
    u_max: f64,
    cfg: QuadConfig,
}

impl EquicorrFiniteLaw {
    pub fn new(n: usize, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::Dimension("sample size T must be ≥ 1".into()));
        }
        let omega = omega_n(n)?;
        let sd = logistic_beta_variance(n)?.sqrt();
        let a = 0.5 * (n as f64 - 1.0);
        let mut law = EquicorrFiniteLaw {
            n,
            t,
            omega,
            sd,
            ln_norm: ln_gamma(a) + ln_gamma(0.5),
            u_max: 1.0,
            cfg: quad_config(),
        };
        while law.ln_cf(law.u_max).re > -CF_TRUNCATION_LOG {
            law.u_max *= 1.5;
        }
        Ok(law)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sample_size(&self) -> usize {
        self.t
    }

    /// Standard deviation of one centred observation, `√V_n`.
    pub fn observation_sd(&self) -> f64 {
        self.sd
    }

    /// log CF of `z` at `u`.
    fn ln_cf(&self, u: f64) -> Complex64 {
        let tf = self.t as f64;
        let s = u / (tf.sqrt() * self.sd);
        let nf = self.n as f64;
        let a = 0.5 * (nf - 1.0);
        let g = ln_gamma_complex(Complex64::new(a, -s / nf)) + ln_gamma_complex(Complex64::new(0.5, s / nf));
        let ln_one = g - self.ln_norm + Complex64::new(0.0, s * self.omega);
        ln_one * tf
    }

    pub fn cf(&self, u: f64) -> Complex64 {
        self.ln_cf(u).exp()
    }

    /// `F(z) = ½ − (1/π) ∫₀^∞ Im(e^{−iuz} CF(u))/u du`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return if z.is_nan() {
                Err(Error::domain("cdf argument is NaN", z))
            } else {
                Ok(if z > 0.0 { 1.0 } else { 0.0 })
            };
        }
        let integrand = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let w = (self.ln_cf(u) - Complex64::new(0.0, u * z)).exp();
            w.im / u
        };
        let breaks = panels(self.u_max, (PI / z.abs().max(1e-3)).min(1.0));
        let integral = integrate_panels(integrand, &breaks, self.cfg)?;
        Ok((0.5 - integral / PI).clamp(0.0, 1.0))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let (mut lo, mut hi) = QUANTILE_BRACKET;
        while self.cdf(lo)? > p {
            lo *= 2.0;
        }
        while self.cdf(hi)? < p {
            hi *= 2.0;
        }
        monotone_root(|z| Ok(self.cdf(z)? - p), lo, hi, QUANTILE_TOL)
    }
}
