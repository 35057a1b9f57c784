//! Outcome-calibrated least squares.
//!
//! Ordinary least squares predictions shrink toward the outcome mean: regressing
//! the fitted values on the observed outcome gives a slope below one. This crate
//! fits linear models under the two linear equality constraints that force that
//! calibration regression to have slope one and intercept zero, and carries the
//! inference and Monte Carlo machinery around the estimator.
//!
//! The crate is `no_std` and only needs `alloc`. IO, the command-line tool and
//! the parallel study runner live in the companion `ocr` crate.

#![cfg_attr(not(test), no_std)]
// `!(a > b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod calibration;
pub mod downstream;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod numerics;
pub mod simulation;

#[cfg(any(test, feature = "test-oracles"))]
pub mod oracle;

pub use calibration::{calibration_fit, conditional_bias, shrinkage_factor, CalibrationFit, PopulationMoments};
pub use downstream::{attenuation_prediction, simple_regression, AssociationEstimate};
pub use error::{OcrError, Result};
pub use estimators::{
    build_constraints, correction_matrix, fit, fit_ocr, fit_ols, predict, projection_operators, ConstraintSystem,
    Dataset, FitDiagnostics, FittedModel, Method,
};
pub use inference::{
    coef_ci, coef_covariance, leverage, mean_response_ci, prediction_interval, sigma2_hat, wald_test, IntervalEstimate,
    WaldResult,
};
pub use numerics::{Matrix, RandomSource};
