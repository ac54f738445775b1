//! Reference correlation estimators: sample correlation, Kendall's tau with
//! Greiner's map, and the quadrant estimator.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::BivariateSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkKind {
    Sample,
    FisherSample,
    Kendall,
    KendallGreiner,
    Quadrant,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 5] = [
        BenchmarkKind::Sample,
        BenchmarkKind::FisherSample,
        BenchmarkKind::Kendall,
        BenchmarkKind::KendallGreiner,
        BenchmarkKind::Quadrant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Sample => "sample",
            BenchmarkKind::FisherSample => "fisher-sample",
            BenchmarkKind::Kendall => "kendall",
            BenchmarkKind::KendallGreiner => "kendall-greiner",
            BenchmarkKind::Quadrant => "quadrant",
        }
    }

    /// Whether the value lives on the correlation scale (as opposed to Fisher).
    pub fn correlation_scale(self) -> bool {
        !matches!(self, BenchmarkKind::FisherSample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkEstimate {
    pub value: f64,
    pub estimator: BenchmarkKind,
}

/// `Σx₁x₂ / √(Σx₁² Σx₂²)` under the zero-mean convention.
pub fn sample_correlation(sample: &BivariateSample) -> Result<f64> {
    let (mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0);
    for [a, b] in sample.pairs() {
        s11 += a * a;
        s22 += b * b;
        s12 += a * b;
    }
    if s11 == 0.0 {
        return Err(Error::ZeroDispersion { column: 0 });
    }
    if s22 == 0.0 {
        return Err(Error::ZeroDispersion { column: 1 });
    }
    Ok((s12 / (s11 * s22).sqrt()).clamp(-1.0, 1.0))
}

fn sign(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Kendall's tau-a, `2/(T(T−1)) Σ_{i<j} sign(x₁ᵢ−x₁ⱼ) sign(x₂ᵢ−x₂ⱼ)`.
/// Ties contribute zero.
pub fn kendall_tau(sample: &BivariateSample) -> Result<f64> {
    let rows = sample.pairs();
    let t = rows.len();
    if t < 2 {
        return Err(Error::Dimension(format!("kendall tau needs T ≥ 2, got {t}")));
    }
    let mut s: i64 = 0;
    for i in 0..t {
        for j in (i + 1)..t {
            s += sign(rows[i][0] - rows[j][0]) * sign(rows[i][1] - rows[j][1]);
        }
    }
    Ok(2.0 * s as f64 / (t as f64 * (t as f64 - 1.0)))
}

/// Greiner's equality `ρ = sin(πτ/2)`.
pub fn greiner_map(tau: f64) -> Result<f64> {
    if !(tau.abs() <= 1.0) {
        return Err(Error::domain("kendall tau must lie in [−1, 1]", tau));
    }
    Ok((0.5 * PI * tau).sin())
}

/// `−cos(πP̂)` with `P̂` the share of rows whose components share a sign.
/// Rows with a zero component count one half.
pub fn quadrant_correlation(sample: &BivariateSample) -> f64 {
    let rows = sample.pairs();
    let mut score = 0.0;
    for [a, b] in rows {
        let p = a * b;
        score += if p > 0.0 {
            1.0
        } else if p == 0.0 {
            0.5
        } else {
            0.0
        };
    }
    let p_hat = score / rows.len() as f64;
    -(PI * p_hat).cos()
}

/// Evaluate one benchmark estimator.
pub fn estimate(sample: &BivariateSample, kind: BenchmarkKind) -> Result<BenchmarkEstimate> {
    let value = match kind {
        BenchmarkKind::Sample => sample_correlation(sample)?,
        BenchmarkKind::FisherSample => {
            let r = sample_correlation(sample)?;
            if r.abs() >= 1.0 {
                return Err(Error::domain("sample correlation on the boundary", r));
            }
            r.atanh()
        }
        BenchmarkKind::Kendall => kendall_tau(sample)?,
        BenchmarkKind::KendallGreiner => greiner_map(kendall_tau(sample)?)?,
        BenchmarkKind::Quadrant => quadrant_correlation(sample),
    };
    Ok(BenchmarkEstimate { value, estimator: kind })
}
