//! Robust multivariate GARCH: EGARCH(1,1) variances with correlation
//! dynamics driven by the similarity innovation `φ_r`.
//!
//! The bivariate model updates the Fisher-transformed correlation and the
//! DECO model updates the log-matrix off-diagonal of an equicorrelation
//! matrix. Both stay inside the correlation range for any parameters with
//! `|β| < 1`.

pub mod correlation;
pub mod egarch;
pub mod fit;
pub mod optimize;
pub mod simulate;

pub use correlation::{
    bivariate_corr_filter, corr_filter, corr_loglik, deco_corr_filter, equicorr_gaussian_logpdf, equicorr_log_det,
    equicorr_quad_form, CorrDynamicsParams, CorrMode, CorrPath, FilterOptions,
};
pub use egarch::{egarch_filter, egarch_loglik, EgarchParams, EgarchPath};
pub use fit::{fit_correlation, fit_egarch, fit_two_step, AssetFit, CorrFit, FilteredPaths, FitConfig, ModelKind, OptimReport, TwoStepFit};
pub use simulate::{simulate_model, Innovations, ModelSpec, SimulatedModel};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{MultivariateSample, Panel};
    use crate::simulation::SeededRng;

    fn spec(kind: CorrMode, alpha: f64) -> ModelSpec {
        let n = kind.dim();
        ModelSpec {
            mu: (0..n).map(|i| 0.01 * i as f64).collect(),
            egarch: vec![EgarchParams::new(-0.05, 0.95, 0.10, 0.5).unwrap(); n],
            corr: CorrDynamicsParams::new(alpha, 0.90, 0.05, kind).unwrap(),
            innovations: Innovations::Gaussian,
        }
    }

    #[test]
    fn bivariate_fit_is_sane() {
        let mut rng = SeededRng { seed: 11 }.stream(0);
        let sim = simulate_model(&spec(CorrMode::Bivariate, 0.02), 2000, 200, &mut rng).unwrap();
        let fit = fit_two_step(&sim.returns, &FitConfig::new(ModelKind::Bivariate)).unwrap();
        assert!(fit.converged);
        assert!(fit.corr.loglik >= fit.corr.optim.start_loglik);
        assert!(fit.paths.rho.iter().all(|r| r.abs() < 1.0));
        for a in &fit.assets {
            assert!(a.loglik >= a.optim.start_loglik);
            assert!((a.params.beta - 0.95).abs() < 0.1);
        }
        // residual means vanish after demeaning
        for (j, a) in fit.assets.iter().enumerate() {
            let c = sim.returns.column(j);
            let m = c.iter().map(|r| r - a.mu).sum::<f64>() / c.len() as f64;
            assert!(m.abs() < 1e-10 * a.h0.sqrt());
        }
        // refitting from the optimum stays put
        let zp = MultivariateSample::from_row_major(
            2,
            (0..sim.returns.len()).flat_map(|t| [fit.paths.z[0][t], fit.paths.z[1][t]]).collect(),
        )
        .unwrap();
        let p = fit.corr.params;
        let again = fit_correlation(
            &zp,
            ModelKind::Bivariate,
            Some(fit.corr.phi0),
            Some(vec![vec![p.alpha, p.beta.atanh(), p.kappa]]),
            FilterOptions::default(),
            optimize::NmConfig::default(),
        )
        .unwrap();
        let q = again.params;
        assert!((q.alpha - p.alpha).abs() < 1e-4 && (q.beta - p.beta).abs() < 1e-4 && (q.kappa - p.kappa).abs() < 1e-4);
    }

    #[test]
    fn fit_rejects_bad_shapes() {
        let m = MultivariateSample::new(vec![vec![0.1, 0.2, 0.3]; 200]).unwrap();
        assert!(fit_two_step(&m, &FitConfig::new(ModelKind::Bivariate)).is_err());
        let short = MultivariateSample::new(vec![vec![0.1, 0.2]; 50]).unwrap();
        assert!(fit_two_step(&short, &FitConfig::new(ModelKind::Deco)).is_err());
    }

    #[test]
    fn outlier_leaves_later_path_unchanged() {
        let mut rng = SeededRng { seed: 4 }.stream(0);
        let sim = simulate_model(&spec(CorrMode::Bivariate, 0.02), 300, 0, &mut rng).unwrap();
        let mut data = sim.z.as_row_major().to_vec();
        let k = 150;
        data[2 * k] *= 1e6;
        data[2 * k + 1] *= 1e6;
        let hit = MultivariateSample::from_row_major(2, data).unwrap();
        let p = CorrDynamicsParams::new(0.02, 0.9, 0.05, CorrMode::Bivariate).unwrap();
        let a = bivariate_corr_filter(&sim.z, &p, 0.3, &FilterOptions::default()).unwrap();
        let b = bivariate_corr_filter(&hit, &p, 0.3, &FilterOptions::default()).unwrap();
        assert_eq!(a.phi, b.phi);
    }
}
