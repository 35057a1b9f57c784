//! Fitted models on disk, as versioned JSON.
//!
//! Floats go through serde_json's round-trip formatting, so every numeric
//! field reads back bit-exactly.

use std::path::Path;

use ocr_core::{CalibrationFit, ConstraintSystem, FitDiagnostics, FittedModel, Matrix, Method};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRecord {
    pub a: Vec<Vec<f64>>,
    pub c: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u64,
    pub method: String,
    pub outcome: String,
    pub columns: Vec<String>,
    pub intercept: bool,
    pub coefficients: Vec<f64>,
    pub constraint: Option<ConstraintRecord>,
    pub rss: f64,
    pub sigma2_hat: f64,
    pub residual_df: usize,
    pub coef_cov: Vec<Vec<f64>>,
    pub xtx: Vec<Vec<f64>>,
    pub calibration: CalibrationRecord,
    pub n: usize,
    pub p: usize,
    pub fallback_kkt: bool,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matrix(name: &str, rows: &[Vec<f64>], r: usize, c: usize) -> Result<Matrix> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::CorruptModel(format!("`{name}` must be {r}x{c}")));
    }
    Matrix::from_rows(rows).map_err(|e| CliError::CorruptModel(format!("`{name}`: {e}")))
}

impl ModelFile {
    pub fn from_model(m: &FittedModel, columns: &[String], outcome: &str, intercept: bool) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            method: m.method.as_str().to_owned(),
            outcome: outcome.to_owned(),
            columns: columns.to_vec(),
            intercept,
            coefficients: m.beta.clone(),
            constraint: m.constraint.as_ref().map(|cs| ConstraintRecord { a: rows(&cs.a), c: cs.c }),
            rss: m.rss,
            sigma2_hat: m.sigma2_hat,
            residual_df: m.residual_df,
            coef_cov: rows(&m.coef_cov),
            xtx: rows(&m.xtx),
            calibration: CalibrationRecord { slope: m.calibration.slope, intercept: m.calibration.intercept },
            n: m.n,
            p: m.p,
            fallback_kkt: m.diagnostics.fallback_kkt,
        }
    }

    /// Rebuilds the in-memory model. Multipliers and the condition estimate
    /// are not persisted.
    pub fn to_model(&self) -> Result<FittedModel> {
        let p = self.p;
        let method: Method =
            self.method.parse().map_err(|_| CliError::CorruptModel(format!("unknown method `{}`", self.method)))?;
        if self.coefficients.len() != p || self.columns.len() != p {
            return Err(CliError::CorruptModel(format!("expected {p} coefficients and column names")));
        }
        let constraint = match (&self.constraint, method) {
            (Some(cr), Method::Ocr) => Some(ConstraintSystem { a: matrix("constraint.a", &cr.a, 2, p)?, c: cr.c }),
            (None, Method::Ols) => None,
            _ => return Err(CliError::CorruptModel("constraint must be present exactly for OCR models".into())),
        };
        Ok(FittedModel {
            method,
            beta: self.coefficients.clone(),
            constraint,
            rss: self.rss,
            residual_df: self.residual_df,
            sigma2_hat: self.sigma2_hat,
            coef_cov: matrix("coef_cov", &self.coef_cov, p, p)?,
            calibration: CalibrationFit { slope: self.calibration.slope, intercept: self.calibration.intercept },
            n: self.n,
            p,
            xtx: matrix("xtx", &self.xtx, p, p)?,
            diagnostics: FitDiagnostics {
                fallback_kkt: self.fallback_kkt,
                multipliers: None,
                gram_condition: f64::NAN,
            },
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model file serializes");
        s.push('\n');
        s
    }

    /// Checks `format_version` before anything else.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::CorruptModel(e.to_string()))?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(FORMAT_VERSION) => {}
            Some(v) => return Err(CliError::UnsupportedVersion(v)),
            None => return Err(CliError::CorruptModel("missing `format_version`".into())),
        }
        serde_json::from_value(value).map_err(|e| CliError::CorruptModel(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}
