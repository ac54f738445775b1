//! Adaptive Gauss–Kronrod (G7/K15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = gk15(&f, a, b);
    // (a, b, value, error)
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if pieces.len() >= cfg.max_intervals {
            return Err(Error::Numerical {
                context: "adaptive quadrature",
                detail: format!(
                    "no convergence on [{a}, {b}] after {} intervals: value {total:e}, error estimate {err:e}",
                    pieces.len()
                ),
            });
        }
        let (i, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = pieces.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Numerical {
                context: "adaptive quadrature",
                detail: format!("interval [{lo}, {hi}] cannot be bisected further"),
            });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // re-sum to shed accumulated update error
    let value = pieces.iter().map(|p| p.2).sum();
    let abs_error = pieces.iter().map(|p| p.3).sum();
    Ok(QuadResult {
        value,
        abs_error,
        intervals: pieces.len(),
    })
}

/// Integrate `f` over the whole real line via `x = t / (1 − t²)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, cfg: QuadConfig) -> Result<QuadResult> {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        let x = t / d;
        let jac = (1.0 + t * t) / (d * d);
        let y = f(x) * jac;
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    // split at the origin so the peak of centred integrands is resolved
    let left = integrate(g, -1.0, 0.0, cfg)?;
    let right = integrate(g, 0.0, 1.0, cfg)?;
    Ok(QuadResult {
        value: left.value + right.value,
        abs_error: left.abs_error + right.abs_error,
        intervals: left.intervals + right.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x * x, 0.0, 2.0, QuadConfig::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 16.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x| (10.0 * x).sin(), 0.0, PI, QuadConfig::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadConfig::default()).unwrap();
        let want = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((r.value - want).abs() < 1e-9 * want);
    }

    #[test]
    fn gaussian_over_real_line() {
        let r = integrate_real_line(|x| (-0.5 * x * x).exp(), QuadConfig::default()).unwrap();
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = QuadConfig {
            max_intervals: 4,
            ..QuadConfig::default()
        };
        let err = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, cfg).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }
}
