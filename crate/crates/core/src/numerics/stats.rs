//! Descriptive statistics. Variances and covariances use the `n - 1`
//! denominator throughout; every slope in this crate is a ratio of two such
//! quantities, so the convention cancels.

use crate::error::{OcrError, Result};

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_variance(v: &[f64]) -> Result<f64> {
    sample_covariance(v, v)
}

pub fn sample_covariance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(OcrError::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    let n = u.len();
    if n < 2 {
        return Err(OcrError::TooFewObservations { needed: 2, got: n });
    }
    let (mu, mv) = (mean(u), mean(v));
    let s: f64 = u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    Ok(s / (n - 1) as f64)
}

/// Sample standard deviation (`n - 1`), zero for a single value.
pub fn sample_sd(v: &[f64]) -> f64 {
    match sample_variance(v) {
        Ok(var) => libm::sqrt(var.max(0.0)),
        Err(_) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(sample_variance(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        // Σ (u-2)(v-4) = (-1)(-2) + 0 + (1)(2) = 4, / (3-1)
        assert!((sample_covariance(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn too_few() {
        assert_eq!(sample_variance(&[1.0]), Err(OcrError::TooFewObservations { needed: 2, got: 1 }));
    }
}
