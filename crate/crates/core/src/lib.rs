//! Robust similarity-based estimation of correlation.
//!
//! The per-observation similarity measure `φ_r = ½ log((x1+x2)²/(x1−x2)²)` (and its
//! multivariate projection form) is an unbiased, outlier-proof signal of the
//! Fisher-transformed correlation for any elliptical law with homogeneous
//! variances. This crate provides
//!
//! * [`similarity`]: the measure itself, the sample estimator `γ̂` and the
//!   Fisher/equicorrelation parameter maps,
//! * [`distributions`]: the exact laws of `φ_r` and of the standardized
//!   estimator for finite `T`,
//! * [`inference`]: confidence intervals and a zero-correlation test,
//! * [`benchmarks`]: sample, Kendall and quadrant correlation estimators,
//! * [`simulation`]: elliptical samplers and a seeded Monte-Carlo harness,
//! * [`garch`]: EGARCH volatility filters with bivariate and equicorrelation
//!   (DECO) correlation recursions driven by `φ_r`, fitted in two steps.

pub mod benchmarks;
pub mod distributions;
pub mod error;
pub mod garch;
pub mod inference;
pub mod quadrature;
pub mod sample;
pub mod similarity;
pub mod simulation;
pub mod special;

pub use error::{DegenerateLocus, Error, Result};
pub use sample::{BivariateSample, MultivariateSample, Panel};
pub use similarity::{CovarianceSpec, SimilarityEstimate};
