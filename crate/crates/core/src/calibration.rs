//! Calibration diagnostics.
//!
//! The calibration regression regresses fitted values on observed outcomes,
//! `ŷᵢ = α + η yᵢ + eᵢ`. A calibrated predictor has `η = 1`, `α = 0`; least
//! squares predictors have `η < 1` and so shrink toward the outcome mean.

use alloc::vec::Vec;

use crate::error::{OcrError, Result};
use crate::numerics::linalg::Cholesky;
use crate::numerics::matrix::{dot, Matrix};
use crate::numerics::stats::{mean, sample_covariance, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares regression of `yhat` on `y`, with intercept.
pub fn calibration_fit(y: &[f64], yhat: &[f64]) -> Result<CalibrationFit> {
    if y.len() != yhat.len() {
        return Err(OcrError::DimensionMismatch { expected: y.len(), got: yhat.len() });
    }
    if y.len() < 3 {
        return Err(OcrError::TooFewObservations { needed: 3, got: y.len() });
    }
    let var_y = sample_variance(y)?;
    if !(var_y > 0.0) {
        return Err(OcrError::DegenerateOutcome);
    }
    let slope = sample_covariance(y, yhat)? / var_y;
    let intercept = mean(yhat) - slope * mean(y);
    Ok(CalibrationFit { slope, intercept })
}

/// First and second moments of a joint `(X, Y)` distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMoments {
    pub mu_x: Vec<f64>,
    pub sigma_xx: Matrix,
    pub sigma_xy: Vec<f64>,
    pub mu_y: f64,
    pub sigma_y2: f64,
}

impl PopulationMoments {
    /// Moments of `y = Xβ + ε` with `X ~ N(0, I_p)`, `ε ~ N(0, σ²)`.
    pub fn isotropic_linear(beta: &[f64], sigma: f64) -> Self {
        let p = beta.len();
        Self {
            mu_x: alloc::vec![0.0; p],
            sigma_xx: Matrix::identity(p),
            sigma_xy: beta.to_vec(),
            mu_y: 0.0,
            sigma_y2: dot(beta, beta) + sigma * sigma,
        }
    }
}

/// Population shrinkage factor `η = Σ_XYᵀ Σ_XX⁻¹ Σ_XY / σ_Y²`, the slope of
/// the population OLS prediction regressed on `Y` (equal to the population R²).
pub fn shrinkage_factor(pm: &PopulationMoments) -> Result<f64> {
    if !(pm.sigma_y2 > 0.0) {
        return Err(OcrError::DegenerateOutcome);
    }
    let factor = Cholesky::factor(&pm.sigma_xx)?;
    let z = factor.solve_lower(&pm.sigma_xy);
    Ok(dot(&z, &z) / pm.sigma_y2)
}

/// `E(Ŷ − Y | Y = y) = (η − 1)(y − μ_Y)`.
pub fn conditional_bias(eta: f64, mu_y: f64, y: f64) -> f64 {
    (eta - 1.0) * (y - mu_y)
}
