//! Special functions: digamma, trigamma, log-gamma (real and complex) and
//! the standard normal distribution.
//!
//! Digamma and trigamma use the upward recurrence to shift the argument past
//! [`ASYMPTOTIC_THRESHOLD`] and then the Bernoulli asymptotic series.

use std::f64::consts::PI;

use num_complex::Complex64;

const ASYMPTOTIC_THRESHOLD: f64 = 6.0;

/// B_{2k}/(2k) for k = 1..7.
const DIGAMMA_ASYMP: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// B_{2k} for k = 1..7.
const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// Digamma ψ(x) for x > 0. Returns NaN otherwise.
pub fn digamma(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return if x == f64::INFINITY { f64::INFINITY } else { f64::NAN };
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut poly = 0.0;
    for c in DIGAMMA_ASYMP.iter().rev() {
        poly = poly * inv2 + c;
    }
    acc + x.ln() - 0.5 / x - inv2 * poly
}

/// Trigamma ψ′(x) for x > 0. Returns NaN otherwise.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return if x == f64::INFINITY { 0.0 } else { f64::NAN };
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    // ψ′(x) ~ 1/x + 1/(2x²) + Σ B_{2k} / x^{2k+1}
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut poly = 0.0;
    for b in BERNOULLI_EVEN.iter().rev() {
        poly = poly * inv2 + b;
    }
    acc + inv + 0.5 * inv2 + inv * inv2 * poly
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection, valid for 0 < x < 0.5
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + s.ln()
}

/// ln Γ(z) for complex z with Re z ≥ ½. The imaginary part is determined
/// only modulo 2π, which is all that is needed when the result is exponentiated.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    debug_assert!(z.re >= 0.5);
    let z = z - 1.0;
    let mut s = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + i as f64);
    }
    let t = z + (LANCZOS_G + 0.5);
    (z + 0.5) * t.ln() - t + s.ln() + HALF_LN_2PI
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p), polished by one Newton step against [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    let z = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
    if !z.is_finite() {
        return z;
    }
    let density = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    if density > 0.0 {
        z - (normal_cdf(z) - p) / density
    } else {
        z
    }
}

/// ln cosh(x) without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    // Reference values from standard tables (Abramowitz & Stegun, DLMF).
    #[test]
    fn digamma_reference_values() {
        let cases = [
            (1.0, -EULER_GAMMA),
            (0.5, -EULER_GAMMA - 2.0 * std::f64::consts::LN_2),
            (2.0, 1.0 - EULER_GAMMA),
            (10.0, 2.251_752_589_066_721),
            (0.1, -10.423_754_940_411_076),
            (100.0, 4.600_161_852_738_087),
        ];
        for (x, want) in cases {
            let got = digamma(x);
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "ψ({x}) = {got}, want {want}");
        }
        assert!(digamma(0.0).is_nan());
        assert!(digamma(-1.5).is_nan());
    }

    #[test]
    fn trigamma_reference_values() {
        let cases = [
            (1.0, PI * PI / 6.0),
            (0.5, PI * PI / 2.0),
            (1.5, PI * PI / 2.0 - 4.0),
            (2.0, PI * PI / 6.0 - 1.0),
            (10.0, 0.105_166_335_681_685_75),
            (0.1, 101.433_299_150_792_75),
        ];
        for (x, want) in cases {
            let got = trigamma(x);
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "ψ′({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn trigamma_is_derivative_of_digamma() {
        for &x in &[0.3, 0.5, 1.7, 4.0, 5.99, 6.0, 12.5] {
            let h = 1e-5;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((fd - trigamma(x)).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn ln_gamma_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.1) - 2.252_712_651_734_206).abs() < 1e-13);
        assert!((ln_beta(0.5, 0.5) - PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn complex_ln_gamma_matches_real_axis_and_modulus_identity() {
        for &x in &[0.5, 1.0, 2.5, 7.3] {
            let z = ln_gamma_complex(Complex64::new(x, 0.0));
            assert!((z.re - ln_gamma(x)).abs() < 1e-13);
            assert!(z.im.abs() < 1e-13);
        }
        // |Γ(½ + iy)|² = π / cosh(πy)
        for &y in &[0.1, 1.0, 3.0, 10.0] {
            let z = ln_gamma_complex(Complex64::new(0.5, y));
            let want = 0.5 * (PI / (PI * y).cosh()).ln();
            assert!((z.re - want).abs() < 1e-11, "y = {y}: {} vs {want}", z.re);
        }
    }

    #[test]
    fn normal_round_trip() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((normal_quantile(0.9995) - 3.290_526_731_491_926).abs() < 1e-12);
        assert_eq!(normal_cdf(0.0), 0.5);
    }

    #[test]
    fn ln_cosh_is_stable() {
        assert!((ln_cosh(1.0) - 1f64.cosh().ln()).abs() < 1e-15);
        assert!((ln_cosh(1000.0) - (1000.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(ln_cosh(0.0), 0.0);
    }
}
