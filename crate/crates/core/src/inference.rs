//! Standard errors, intervals and Wald tests for OLS and OCR fits.
//!
//! OCR inference conditions on the constraint system: `A` and `c` are
//! treated as fixed even though both are computed from `y`. Under that frame
//!
//! ```text
//! Var(β_ocr) = σ² [ (XᵀX)⁻¹ − (XᵀX)⁻¹Aᵀ (A(XᵀX)⁻¹Aᵀ)⁻¹ A(XᵀX)⁻¹ ]
//! σ̂²_ocr     = RSS / (n − p + 2)
//! ```
//!
//! and every interval uses a t reference with the model's residual degrees of
//! freedom.

use crate::error::{OcrError, Result};
use crate::estimators::{constrained_inverse_gram, ConstraintGram, FittedModel, Method};
use crate::numerics::linalg::Cholesky;
use crate::numerics::matrix::{dot, Matrix};
use crate::numerics::special::{t_quantile, t_two_sided_p};

/// Slack below zero tolerated on a computed leverage, relative to `1 + h_ols`.
const LEVERAGE_CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl IntervalEstimate {
    pub fn symmetric(point: f64, half_width: f64, level: f64) -> Self {
        Self { point, lower: point - half_width, upper: point + half_width, level }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(OcrError::InvalidProbability(level))
    }
}

fn check_index(m: &FittedModel, j: usize) -> Result<()> {
    if j < m.p {
        Ok(())
    } else {
        Err(OcrError::IndexOutOfRange { index: j, len: m.p })
    }
}

/// Two-sided critical value `t_{df, 1 − (1 − level)/2}`.
pub fn critical_value(df: usize, level: f64) -> Result<f64> {
    check_level(level)?;
    if df == 0 {
        return Err(OcrError::DegenerateDf);
    }
    t_quantile(df as f64, 1.0 - 0.5 * (1.0 - level))
}

/// `RSS / residual_df`.
pub fn sigma2_hat(m: &FittedModel) -> Result<f64> {
    if m.residual_df == 0 {
        return Err(OcrError::DegenerateDf);
    }
    Ok(m.rss / m.residual_df as f64)
}

/// Unscaled covariance: `(XᵀX)⁻¹` for OLS, the constrained form for OCR.
pub fn unscaled_covariance(m: &FittedModel) -> Result<Matrix> {
    let factor = Cholesky::factor(&m.xtx)?;
    match (m.method, &m.constraint) {
        (Method::Ols, _) => Ok(factor.inverse()),
        (Method::Ocr, Some(cs)) => constrained_inverse_gram(&factor, cs),
        (Method::Ocr, None) => Err(OcrError::InvalidArgument("OCR model without a constraint system")),
    }
}

/// Coefficient covariance recomputed from the cached Gram matrix.
pub fn coef_covariance(m: &FittedModel) -> Result<Matrix> {
    Ok(unscaled_covariance(m)?.scale(sigma2_hat(m)?))
}

pub fn standard_error(m: &FittedModel, j: usize) -> Result<f64> {
    check_index(m, j)?;
    Ok(libm::sqrt(m.coef_cov[(j, j)].max(0.0)))
}

/// `β̂_j ± t · SE(β̂_j)`.
pub fn coef_ci(m: &FittedModel, j: usize, level: f64) -> Result<IntervalEstimate> {
    let se = standard_error(m, j)?;
    let t = critical_value(m.residual_df, level)?;
    Ok(IntervalEstimate::symmetric(m.beta[j], t * se, level))
}

/// `β̂_j / SE(β̂_j)` against a t reference with the residual df.
pub fn wald_test(m: &FittedModel, j: usize) -> Result<WaldResult> {
    let se = standard_error(m, j)?;
    if !(se > 0.0) {
        return Err(OcrError::ZeroStandardError { index: j });
    }
    if m.residual_df == 0 {
        return Err(OcrError::DegenerateDf);
    }
    let statistic = m.beta[j] / se;
    let df = m.residual_df as f64;
    Ok(WaldResult { statistic, df, p_value: t_two_sided_p(statistic, df)? })
}

/// Leverage `h₀ = x₀ᵀ V x₀` with `V` the unscaled covariance of the fit.
///
/// The OCR value subtracts a PSD term from the OLS value, so it never
/// exceeds the OLS leverage at the same point.
pub fn leverage(m: &FittedModel, x0: &[f64]) -> Result<f64> {
    if x0.len() != m.p {
        return Err(OcrError::DimensionMismatch { expected: m.p, got: x0.len() });
    }
    let factor = Cholesky::factor(&m.xtx)?;
    let z = factor.solve_lower(x0);
    let h_ols = dot(&z, &z);
    let h = match (m.method, &m.constraint) {
        (Method::Ols, _) => h_ols,
        (Method::Ocr, _) if m.p == 2 => 0.0,
        (Method::Ocr, Some(cs)) => {
            let cg = ConstraintGram::new(&factor, cs)?;
            let g = [dot(&cg.g[0], &z), dot(&cg.g[1], &z)];
            let u = cg.solve(g);
            h_ols - (g[0] * u[0] + g[1] * u[1])
        }
        (Method::Ocr, None) => return Err(OcrError::InvalidArgument("OCR model without a constraint system")),
    };
    if h >= 0.0 {
        Ok(h)
    } else if h >= -LEVERAGE_CLAMP_TOL * (1.0 + h_ols) {
        Ok(0.0)
    } else {
        Err(OcrError::InconsistentLeverage(h))
    }
}

/// Confidence interval for the mean response `x₀ᵀβ`.
pub fn mean_response_ci(m: &FittedModel, x0: &[f64], level: f64) -> Result<IntervalEstimate> {
    let h = leverage(m, x0)?;
    let t = critical_value(m.residual_df, level)?;
    let point = dot(x0, &m.beta);
    Ok(IntervalEstimate::symmetric(point, t * libm::sqrt(sigma2_hat(m)? * h), level))
}

/// Prediction interval for a new observation at `x₀`.
pub fn prediction_interval(m: &FittedModel, x0: &[f64], level: f64) -> Result<IntervalEstimate> {
    let h = leverage(m, x0)?;
    let t = critical_value(m.residual_df, level)?;
    let point = dot(x0, &m.beta);
    Ok(IntervalEstimate::symmetric(point, t * libm::sqrt(sigma2_hat(m)? * (1.0 + h)), level))
}
