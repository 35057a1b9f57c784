//! Association between a (predicted) outcome and an external variable `w`.
//!
//! Regressing OLS predictions on `w` recovers only `η θ`, where `θ` is the
//! slope of the true outcome on `w` and `η < 1` is the shrinkage factor.
//! Calibrated predictions (`η = 1`) remove the attenuation.

use crate::error::{OcrError, Result};
use crate::inference::IntervalEstimate;
use crate::numerics::special::t_quantile;
use crate::numerics::stats::mean;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationEstimate {
    pub theta_hat: f64,
    pub se: f64,
    pub ci: IntervalEstimate,
    pub n: usize,
}

/// Simple linear regression of `response` on `w` with an intercept; the
/// interval is the usual t interval on `n − 2` degrees of freedom.
pub fn simple_regression(response: &[f64], w: &[f64], level: f64) -> Result<AssociationEstimate> {
    let n = response.len();
    if w.len() != n {
        return Err(OcrError::DimensionMismatch { expected: n, got: w.len() });
    }
    if n < 3 {
        return Err(OcrError::TooFewObservations { needed: 3, got: n });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(OcrError::InvalidProbability(level));
    }
    let (mr, mw) = (mean(response), mean(w));
    let (mut sww, mut swr) = (0.0, 0.0);
    for (&r, &x) in response.iter().zip(w) {
        sww += (x - mw) * (x - mw);
        swr += (x - mw) * (r - mr);
    }
    if !(sww > f64::EPSILON * n as f64 * (1.0 + mw * mw)) {
        return Err(OcrError::DegenerateRegressor);
    }
    let theta_hat = swr / sww;
    let intercept = mr - theta_hat * mw;
    let rss: f64 = response
        .iter()
        .zip(w)
        .map(|(&r, &x)| {
            let e = r - intercept - theta_hat * x;
            e * e
        })
        .sum();
    let df = (n - 2) as f64;
    let se = libm::sqrt(rss / df / sww);
    let t = t_quantile(df, 1.0 - 0.5 * (1.0 - level))?;
    Ok(AssociationEstimate { theta_hat, se, ci: IntervalEstimate::symmetric(theta_hat, t * se, level), n })
}

/// Population slope of the shrunken predictor on `w`: `η θ`. The implied
/// downstream bias is `(η − 1) θ`.
pub fn attenuation_prediction(eta: f64, theta: f64) -> f64 {
    eta * theta
}
