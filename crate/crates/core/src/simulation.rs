//! Monte Carlo sampling studies under elliptical laws.
//!
//! Draws use the radial form `x = η A u`: `u` is uniform on the unit sphere,
//! `A` is the Cholesky factor of the scatter matrix, and `η` is a radial
//! variable fixed by the family. Every replication reads from its own ChaCha8
//! stream, so results do not depend on thread count.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::benchmarks::{self, BenchmarkKind};
use crate::distributions::{hetero_variance, logistic_beta_variance};
use crate::error::{Error, Result};
use crate::sample::{BivariateSample, MultivariateSample, Panel};
use crate::similarity::{equicorr_phi, gamma_hat, gamma_hat_bias_corrected, resemblance_coefficient, CovarianceSpec};

/// Identifier recorded next to every seed.
pub const RNG_ALGORITHM: &str = "chacha8-stream-per-replication";

/// Redraw budget per replication before a study gives up.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyKind {
    Gaussian,
    StudentT { nu: f64 },
    Cauchy,
}

/// Lower-triangular Cholesky factor, row-major.
pub fn cholesky(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("scatter matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * (m[i][j].abs() + m[j][i].abs()) {
                return Err(Error::Dimension("scatter matrix must be symmetric".into()));
            }
        }
    }
    let a = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let l = a
        .cholesky()
        .ok_or_else(|| Error::Dimension("scatter matrix is not positive definite".into()))?
        .unpack();
    Ok((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]).collect())
}

/// `σ²[(1−ρ)I + ρJ]`.
pub fn build_equicorrelation(sigma_sq: f64, rho: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    CovarianceSpec::equicorrelation(sigma_sq, rho, n)?;
    Ok((0..n)
        .map(|i| (0..n).map(|j| if i == j { sigma_sq } else { sigma_sq * rho }).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalFamily {
    kind: FamilyKind,
    spec: CovarianceSpec,
    chol: Vec<f64>,
}

impl EllipticalFamily {
    pub fn new(kind: FamilyKind, spec: CovarianceSpec) -> Result<Self> {
        if let FamilyKind::StudentT { nu } = kind {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::domain("degrees of freedom must be positive", nu));
            }
        }
        let n = spec.dim();
        let m: Vec<Vec<f64>> = match spec {
            CovarianceSpec::Bivariate {
                sigma1_sq,
                sigma2_sq,
                sigma12,
            } => vec![vec![sigma1_sq, sigma12], vec![sigma12, sigma2_sq]],
            CovarianceSpec::Equicorrelation { sigma_sq, rho, .. } => build_equicorrelation(sigma_sq, rho, n)?,
        };
        let chol = cholesky(&m)?;
        Ok(EllipticalFamily { kind, spec, chol })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Draw one observation.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.dim();
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        // ‖g‖ ~ χ_n
        let eta = match self.kind {
            FamilyKind::Gaussian => norm,
            FamilyKind::StudentT { nu } => {
                let w: f64 = ChiSquared::new(nu).expect("validated").sample(rng);
                norm * (nu / w).sqrt()
            }
            FamilyKind::Cauchy => {
                let w: f64 = rng.sample(StandardNormal);
                norm / w.abs()
            }
        };
        for i in 0..n {
            let au: f64 = (0..=i).map(|k| self.chol[i * n + k] * g[k] / norm).sum();
            out[i] = eta * au;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<MultivariateSample> {
        let n = self.dim();
        let mut data = vec![0.0; t * n];
        for row in data.chunks_mut(n) {
            self.draw(rng, row);
        }
        MultivariateSample::from_row_major(n, data)
    }
}

/// Seed source for a study; replication `r` reads stream `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeededRng {
    pub seed: u64,
}

impl SeededRng {
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyEstimator {
    /// `γ̂`, bias-corrected when `n > 2`.
    Similarity,
    Benchmark(BenchmarkKind),
}

impl StudyEstimator {
    pub fn name(self) -> &'static str {
        match self {
            StudyEstimator::Similarity => "similarity",
            StudyEstimator::Benchmark(k) => k.name(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "similarity" || s == "gamma" {
            return Some(StudyEstimator::Similarity);
        }
        BenchmarkKind::ALL.into_iter().find(|k| k.name() == s).map(StudyEstimator::Benchmark)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub family: EllipticalFamily,
    pub t: usize,
    pub replications: usize,
    pub estimators: Vec<StudyEstimator>,
    pub seed: u64,
    pub histogram_bins: usize,
    pub histogram_range: (f64, f64),
}

impl StudyConfig {
    pub fn new(family: EllipticalFamily, t: usize, replications: usize, seed: u64) -> Self {
        StudyConfig {
            family,
            t,
            replications,
            estimators: vec![StudyEstimator::Similarity],
            seed,
            histogram_bins: 60,
            histogram_range: (-6.0, 6.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub below: usize,
    pub above: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: StudyEstimator,
    /// Population value the estimator is centred on, on its own scale.
    pub target: f64,
    /// Asymptotic sd of `√T(estimate − target)` where known in closed form.
    pub asymptotic_sd: Option<f64>,
    pub mean: f64,
    pub variance: f64,
    /// `√T(estimate − target)`, divided by `asymptotic_sd` when available.
    pub standardized_quantiles: Vec<(f64, f64)>,
    pub histogram: Histogram,
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(skip)]
    pub standardized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub family: FamilyKind,
    pub dim: usize,
    pub t: usize,
    pub replications: usize,
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub redraws: usize,
    pub summaries: Vec<EstimatorSummary>,
}

pub const REPORT_PROBABILITIES: [f64; 9] = [0.005, 0.025, 0.05, 0.1, 0.5, 0.9, 0.95, 0.975, 0.995];

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn histogram(values: &[f64], bins: usize, (lo, hi): (f64, f64)) -> Histogram {
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    let (mut below, mut above) = (0, 0);
    for &v in values {
        if v < lo {
            below += 1;
        } else if v >= hi {
            above += 1;
        } else {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    let scale = 1.0 / (values.len() as f64 * width);
    Histogram {
        edges,
        density: counts.iter().map(|&c| c as f64 * scale).collect(),
        below,
        above,
    }
}

struct Targets {
    similarity: (f64, f64),
    rho: f64,
}

fn targets(spec: &CovarianceSpec) -> Result<Targets> {
    let n = spec.dim();
    let similarity = if n == 2 {
        let biv = match *spec {
            CovarianceSpec::Equicorrelation { sigma_sq, rho, .. } => {
                CovarianceSpec::bivariate(sigma_sq, sigma_sq, sigma_sq * rho)?
            }
            b => b,
        };
        // centred on atanh ξ, which equals atanh ρ under equal variances
        (resemblance_coefficient(&biv)?.atanh(), hetero_variance(&biv)?.sqrt())
    } else {
        (spec.phi_rho(), logistic_beta_variance(n)?.sqrt())
    };
    Ok(Targets {
        similarity,
        rho: spec.rho(),
    })
}

fn estimator_target(e: StudyEstimator, tg: &Targets) -> (f64, Option<f64>) {
    let rho = tg.rho;
    match e {
        StudyEstimator::Similarity => (tg.similarity.0, Some(tg.similarity.1)),
        StudyEstimator::Benchmark(k) => match k {
            BenchmarkKind::Sample | BenchmarkKind::KendallGreiner | BenchmarkKind::Quadrant => (rho, None),
            BenchmarkKind::FisherSample => (rho.atanh(), None),
            BenchmarkKind::Kendall => (2.0 / std::f64::consts::PI * rho.asin(), None),
        },
    }
}

fn evaluate(sample: &MultivariateSample, estimators: &[StudyEstimator]) -> Result<Vec<f64>> {
    let biv = sample.to_bivariate();
    estimators
        .iter()
        .map(|e| match e {
            StudyEstimator::Similarity => {
                if sample.dim() == 2 {
                    gamma_hat(sample).map(|g| g.gamma_hat)
                } else {
                    gamma_hat_bias_corrected(sample).map(|g| g.gamma_hat)
                }
            }
            StudyEstimator::Benchmark(k) => {
                let b: &BivariateSample = biv.as_ref().expect("checked bivariate");
                benchmarks::estimate(b, *k).map(|v| v.value)
            }
        })
        .collect()
}

/// Run replications in parallel; each one redraws on degenerate samples.
pub fn mc_sampling_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let n = cfg.family.dim();
    if cfg.replications == 0 || cfg.t == 0 {
        return Err(Error::EmptySample);
    }
    if cfg.estimators.is_empty() {
        return Err(Error::Dimension("no estimators requested".into()));
    }
    for e in &cfg.estimators {
        if let StudyEstimator::Benchmark(k) = e {
            if n != 2 {
                return Err(Error::Dimension(format!("{} is bivariate only", k.name())));
            }
            if cfg.t < 2 && *k != BenchmarkKind::Quadrant && *k != BenchmarkKind::Sample {
                return Err(Error::Dimension(format!("{} needs T ≥ 2", k.name())));
            }
        }
    }
    if cfg.histogram_bins == 0 || !(cfg.histogram_range.0 < cfg.histogram_range.1) {
        return Err(Error::Dimension("invalid histogram layout".into()));
    }
    let tg = targets(cfg.family.spec())?;
    let rngs = SeededRng { seed: cfg.seed };

    let outcomes: Vec<Result<(Vec<f64>, usize)>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = rngs.stream(r as u64);
            let mut last = None;
            for attempt in 0..=MAX_REDRAWS {
                let sample = cfg.family.sample(cfg.t, &mut rng)?;
                match evaluate(&sample, &cfg.estimators) {
                    Ok(v) => return Ok((v, attempt)),
                    Err(e) => last = Some(e),
                }
            }
            Err(Error::Numerical {
                context: "monte carlo replication",
                detail: format!(
                    "replication {r} degenerate after {MAX_REDRAWS} redraws: {}",
                    last.expect("at least one attempt")
                ),
            })
        })
        .collect();

    let mut per_est: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.replications); cfg.estimators.len()];
    let mut redraws = 0;
    for o in outcomes {
        let (v, extra) = o?;
        redraws += extra;
        for (k, x) in v.into_iter().enumerate() {
            per_est[k].push(x);
        }
    }

    let root_t = (cfg.t as f64).sqrt();
    let summaries = cfg
        .estimators
        .iter()
        .zip(per_est)
        .map(|(&e, values)| {
            let (target, sd) = estimator_target(e, &tg);
            let m = values.len() as f64;
            let mean = values.iter().sum::<f64>() / m;
            let variance = if values.len() > 1 {
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            let standardized: Vec<f64> = values.iter().map(|v| root_t * (v - target) / sd.unwrap_or(1.0)).collect();
            let mut sorted = standardized.clone();
            sorted.sort_by(f64::total_cmp);
            EstimatorSummary {
                estimator: e,
                target,
                asymptotic_sd: sd,
                mean,
                variance,
                standardized_quantiles: REPORT_PROBABILITIES
                    .iter()
                    .map(|&p| (p, empirical_quantile(&sorted, p)))
                    .collect(),
                histogram: histogram(&standardized, cfg.histogram_bins, cfg.histogram_range),
                values,
                standardized,
            }
        })
        .collect();

    Ok(StudyReport {
        family: cfg.family.kind(),
        dim: n,
        t: cfg.t,
        replications: cfg.replications,
        seed: cfg.seed,
        rng_algorithm: RNG_ALGORITHM,
        redraws,
        summaries,
    })
}

/// Kolmogorov–Smirnov distance between an empirical sample and a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value `√(−ln(α/2)/2) · √((m+k)/(mk))`; pass `k = None`
/// for the one-sample test.
pub fn ks_critical(alpha: f64, m: usize, k: Option<usize>) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    match k {
        None => c / (m as f64).sqrt(),
        Some(k) => c * ((m + k) as f64 / (m * k) as f64).sqrt(),
    }
}

/// Convenience: equicorrelated family with unit variances.
pub fn equicorrelated_family(kind: FamilyKind, rho: f64, n: usize) -> Result<EllipticalFamily> {
    let spec = if n == 2 {
        CovarianceSpec::bivariate(1.0, 1.0, rho)?
    } else {
        CovarianceSpec::equicorrelation(1.0, rho, n)?
    };
    EllipticalFamily::new(kind, spec)
}

/// Fisher-scale target for an equicorrelated family.
pub fn equicorr_target(rho: f64, n: usize) -> Result<f64> {
    equicorr_phi(rho, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sech_cdf;

    #[test]
    fn cholesky_reconstructs() {
        let m = build_equicorrelation(2.0, 0.3, 4).unwrap();
        let l = cholesky(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| l[i * 4 + k] * l[j * 4 + k]).sum();
                assert!((v - m[i][j]).abs() < 1e-14);
            }
        }
        assert!(cholesky(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(build_equicorrelation(1.0, -0.5, 4).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = SeededRng { seed: 7 };
        let a: u64 = s.stream(3).random();
        let b: u64 = s.stream(3).random();
        let c: u64 = s.stream(4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_draws_have_target_covariance() {
        let fam = EllipticalFamily::new(FamilyKind::Gaussian, CovarianceSpec::bivariate(4.0, 1.0, 1.2).unwrap()).unwrap();
        let mut rng = SeededRng { seed: 1 }.stream(0);
        let s = fam.sample(200_000, &mut rng).unwrap();
        let t = s.len() as f64;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for r in s.rows() {
            a += r[0] * r[0];
            b += r[1] * r[1];
            c += r[0] * r[1];
        }
        assert!((a / t - 4.0).abs() < 0.05);
        assert!((b / t - 1.0).abs() < 0.015);
        assert!((c / t - 1.2).abs() < 0.03);
    }

    #[test]
    fn study_is_deterministic_and_thread_independent() {
        let fam = equicorrelated_family(FamilyKind::StudentT { nu: 3.0 }, 0.4, 2).unwrap();
        let mut cfg = StudyConfig::new(fam, 20, 300, 99);
        cfg.estimators = vec![
            StudyEstimator::Similarity,
            StudyEstimator::Benchmark(BenchmarkKind::Kendall),
        ];
        let a = mc_sampling_study(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_sampling_study(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn single_observation_matches_sech_law() {
        let fam = equicorrelated_family(FamilyKind::Cauchy, 0.6, 2).unwrap();
        let cfg = StudyConfig::new(fam, 1, 20_000, 5);
        let rep = mc_sampling_study(&cfg).unwrap();
        let s = &rep.summaries[0];
        let phi = 0.6f64.atanh();
        let d = ks_statistic(&s.values, |x| sech_cdf(x, phi));
        assert!(d < ks_critical(0.001, s.values.len(), None), "KS {d}");
    }

    #[test]
    fn ks_helpers() {
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&u, |x| x) <= 0.0005 + 1e-12);
        assert_eq!(ks_two_sample(&u, &u), 0.0);
        let v: Vec<f64> = u.iter().map(|x| x + 0.1).collect();
        assert!((ks_two_sample(&u, &v) - 0.1).abs() < 2e-3);
        assert!((ks_critical(0.05, 100, None) - 0.1358).abs() < 1e-3);
    }

    #[test]
    fn quantile_and_histogram() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.5), 2.5);
        assert_eq!(empirical_quantile(&v, 0.0), 1.0);
        let h = histogram(&[-10.0, 0.1, 0.2, 10.0], 2, (-1.0, 1.0));
        assert_eq!((h.below, h.above), (1, 1));
        assert_eq!(h.density, vec![0.0, 0.5]);
    }

    #[test]
    fn study_rejects_bad_configs() {
        let fam = equicorrelated_family(FamilyKind::Gaussian, 0.2, 3).unwrap();
        let mut cfg = StudyConfig::new(fam, 10, 10, 1);
        cfg.estimators = vec![StudyEstimator::Benchmark(BenchmarkKind::Sample)];
        assert!(mc_sampling_study(&cfg).is_err());
        assert_eq!(StudyEstimator::parse("kendall-greiner"), Some(StudyEstimator::Benchmark(BenchmarkKind::KendallGreiner)));
        assert_eq!(StudyEstimator::parse("nope"), None);
    }
}
