//! Seeded Monte Carlo studies.
//!
//! Two studies share one engine:
//!
//! * **calibration**: `X ~ N(0, I)`, `y = X β + σ ε` with `β = 0.5 · 1_p`; both
//!   methods are scored on in-sample MSE and calibration slope/intercept.
//! * **downstream**: `(y, w)` bivariate normal with `Cov(y, w) = θ σ_W²` and
//!   `Var(y) = 0.25 p + σ²`, plus an independent feature matrix `X`; the
//!   fitted values of each method are regressed on `w`.
//!
//! Both studies fit the models with an added intercept column by default
//! (`ScenarioConfig::intercept`); the data-generating processes themselves
//! have none. Without it the mean constraint at `p = 2` pins `β` to a point
//! set by the nearly-zero column means and the estimator becomes heavy-tailed.
//!
//! Replication `i` draws from stream `i` of the scenario's base seed, so any
//! subset of replications can run anywhere and in any order. Aggregation
//! sorts by replication index first, which fixes the summation order.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::calibration::{calibration_fit, CalibrationFit};
use crate::downstream::simple_regression;
use crate::error::{OcrError, Result};
use crate::estimators::{fit, Dataset, FittedModel, Method};
use crate::numerics::matrix::Matrix;
use crate::numerics::random::{standard_normal, RandomSource};
use crate::numerics::stats::{mean, sample_sd};

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_REPLICATIONS: usize = 500;
/// Common value of every true coefficient in the linear design.
pub const TRUE_COEFFICIENT: f64 = 0.5;
/// Fixed normal multiplier for the downstream Wald interval.
pub const WALD_MULTIPLIER: f64 = 1.96;

pub const METHODS: [Method; 2] = [Method::Ols, Method::Ocr];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Study {
    Calibration,
    Downstream,
}

impl Study {
    pub fn as_str(self) -> &'static str {
        match self {
            Study::Calibration => "calibration",
            Study::Downstream => "downstream",
        }
    }
}

impl core::str::FromStr for Study {
    type Err = OcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calibration" => Ok(Study::Calibration),
            "downstream" => Ok(Study::Downstream),
            _ => Err(OcrError::InvalidArgument("study must be `calibration` or `downstream`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    pub theta: f64,
    pub sigma_w: f64,
    pub replications: usize,
    pub level: f64,
    pub base_seed: u64,
    pub study: Study,
    /// Fit with a leading all-ones column.
    pub intercept: bool,
}

impl ScenarioConfig {
    pub fn calibration(n: usize, p: usize, sigma: f64) -> Self {
        Self {
            n,
            p,
            sigma,
            theta: 0.5,
            sigma_w: 1.0,
            replications: DEFAULT_REPLICATIONS,
            level: 0.95,
            base_seed: DEFAULT_SEED,
            study: Study::Calibration,
            intercept: true,
        }
    }

    pub fn downstream(n: usize, p: usize, sigma: f64) -> Self {
        Self { study: Study::Downstream, ..Self::calibration(n, p, sigma) }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(OcrError::InvalidArgument("replications must be at least 1"));
        }
        if !(self.n > self.model_columns() && self.p >= 2) {
            return Err(OcrError::InvalidShape { n: self.n, p: self.p });
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(OcrError::InvalidArgument("sigma must be finite and non-negative"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(OcrError::InvalidProbability(self.level));
        }
        if self.study == Study::Downstream {
            if !(self.sigma_w > 0.0 && self.theta.is_finite()) {
                return Err(OcrError::InvalidArgument("sigma_w must be positive and theta finite"));
            }
            if !(self.outcome_variance() - self.theta * self.theta * self.sigma_w * self.sigma_w > 0.0) {
                return Err(OcrError::InvalidCovariance);
            }
        }
        Ok(())
    }

    /// `Var(y) = 0.25 p + σ²`.
    pub fn outcome_variance(&self) -> f64 {
        TRUE_COEFFICIENT * TRUE_COEFFICIENT * self.p as f64 + self.sigma * self.sigma
    }

    /// Population shrinkage of OLS predictions under the linear design.
    pub fn population_eta(&self) -> f64 {
        TRUE_COEFFICIENT * TRUE_COEFFICIENT * self.p as f64 / self.outcome_variance()
    }

    /// Columns of the fitted design: `p`, plus one with an intercept.
    pub fn model_columns(&self) -> usize {
        self.p + self.intercept as usize
    }

    /// The design the models are fitted on.
    pub fn model_design(&self, d: Dataset) -> Result<Dataset> {
        if self.intercept {
            Dataset::with_intercept(d.x(), d.y().to_vec())
        } else {
            Ok(d)
        }
    }

    pub fn random_source(&self, replication: usize) -> RandomSource {
        RandomSource::new(self.base_seed, replication as u64)
    }
}

/// The 2×2×2 design `n ∈ {200, 500}`, `p ∈ {2, 5}`, `σ ∈ {0.5, 1.0}`, with
/// σ varying slowest and n fastest.
pub fn factorial_grid(study: Study, replications: usize, seed: u64) -> Vec<ScenarioConfig> {
    let mut out = Vec::with_capacity(8);
    for sigma in [0.5, 1.0] {
        for p in [2, 5] {
            for n in [200, 500] {
                let cfg = match study {
                    Study::Calibration => ScenarioConfig::calibration(n, p, sigma),
                    Study::Downstream => ScenarioConfig::downstream(n, p, sigma),
                };
                out.push(cfg.with_replications(replications).with_seed(seed));
            }
        }
    }
    out
}

fn normal_matrix(rs: &mut RandomSource, n: usize, p: usize) -> Result<Matrix> {
    Matrix::new(n, p, standard_normal(rs, n * p))
}

/// `y = X (0.5 · 1_p) + σ ε` with standard normal `X` and `ε`.
pub fn dgp_linear(cfg: &ScenarioConfig, rs: &mut RandomSource) -> Result<Dataset> {
    let x = normal_matrix(rs, cfg.n, cfg.p)?;
    let eps = standard_normal(rs, cfg.n);
    let y = (0..cfg.n).map(|i| TRUE_COEFFICIENT * x.row(i).iter().sum::<f64>() + cfg.sigma * eps[i]).collect();
    Dataset::new(x, y)
}

/// Bivariate normal `(y, w)` and an independent feature matrix `X`.
pub fn dgp_downstream(cfg: &ScenarioConfig, rs: &mut RandomSource) -> Result<(Dataset, Vec<f64>)> {
    let var_y = cfg.outcome_variance();
    let var_w = cfg.sigma_w * cfg.sigma_w;
    let cov = cfg.theta * var_w;
    if !(var_y * var_w - cov * cov > 0.0) {
        return Err(OcrError::InvalidCovariance);
    }
    let x = normal_matrix(rs, cfg.n, cfg.p)?;
    let z1 = standard_normal(rs, cfg.n);
    let z2 = standard_normal(rs, cfg.n);
    // lower Cholesky factor of [[var_y, cov], [cov, var_w]]
    let sd_y = libm::sqrt(var_y);
    let l21 = cov / sd_y;
    let l22 = libm::sqrt(var_w - l21 * l21);
    let y = z1.iter().map(|z| sd_y * z).collect();
    let w = z1.iter().zip(&z2).map(|(a, b)| l21 * a + l22 * b).collect();
    Ok((Dataset::new(x, y)?, w))
}

/// `y = X β + σ ε` as in [`dgp_linear`], then `w = γ y + τ u` with fresh
/// noise `u`, so `w` relates to `X` only through `y`.
pub fn dgp_attenuation(
    cfg: &ScenarioConfig,
    gamma: f64,
    tau: f64,
    rs: &mut RandomSource,
) -> Result<(Dataset, Vec<f64>)> {
    let d = dgp_linear(cfg, rs)?;
    let u = standard_normal(rs, cfg.n);
    let w = d.y().iter().zip(&u).map(|(y, u)| gamma * y + tau * u).collect();
    Ok((d, w))
}

/// Slopes on `w` of the true outcome and of each method's fitted values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationRecord {
    pub direct: f64,
    pub ols: f64,
    pub ocr: f64,
}

pub fn run_attenuation_replication(
    cfg: &ScenarioConfig,
    gamma: f64,
    tau: f64,
    index: usize,
) -> Result<AttenuationRecord> {
    let inner = || -> Result<AttenuationRecord> {
        let (d, w) = dgp_attenuation(cfg, gamma, tau, &mut cfg.random_source(index))?;
        let d = cfg.model_design(d)?;
        let slope = |m: Method| -> Result<f64> {
            let yhat = d.x().matvec(&fit(&d, m)?.beta)?;
            Ok(simple_regression(&yhat, &w, cfg.level)?.theta_hat)
        };
        Ok(AttenuationRecord {
            direct: simple_regression(d.y(), &w, cfg.level)?.theta_hat,
            ols: slope(Method::Ols)?,
            ocr: slope(Method::Ocr)?,
        })
    };
    inner().map_err(|e| OcrError::Replication { index, source: Box::new(e) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodRecord {
    pub method: Method,
    pub mse: f64,
    pub calibration: CalibrationFit,
    pub theta_hat: Option<f64>,
    pub se_theta: Option<f64>,
    pub ci_covers: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationRecord {
    pub replication_index: usize,
    pub ols: MethodRecord,
    pub ocr: MethodRecord,
}

impl ReplicationRecord {
    pub fn method(&self, m: Method) -> &MethodRecord {
        match m {
            Method::Ols => &self.ols,
            Method::Ocr => &self.ocr,
        }
    }
}

fn score(model: &FittedModel, d: &Dataset, w: Option<&[f64]>, cfg: &ScenarioConfig) -> Result<MethodRecord> {
    let yhat = d.x().matvec(&model.beta)?;
    let mse = model.rss / d.n() as f64;
    let calibration = calibration_fit(d.y(), &yhat)?;
    let (theta_hat, se_theta, ci_covers) = match w {
        Some(w) => {
            let est = simple_regression(&yhat, w, cfg.level)?;
            let covers = (est.theta_hat - cfg.theta).abs() <= WALD_MULTIPLIER * est.se;
            (Some(est.theta_hat), Some(est.se), Some(covers))
        }
        None => (None, None, None),
    };
    Ok(MethodRecord { method: model.method, mse, calibration, theta_hat, se_theta, ci_covers })
}

fn replicate(cfg: &ScenarioConfig, index: usize) -> Result<ReplicationRecord> {
    let mut rs = cfg.random_source(index);
    let (d, w) = match cfg.study {
        Study::Calibration => (dgp_linear(cfg, &mut rs)?, None),
        Study::Downstream => {
            let (d, w) = dgp_downstream(cfg, &mut rs)?;
            (d, Some(w))
        }
    };
    let d = cfg.model_design(d)?;
    let ols = score(&fit(&d, Method::Ols)?, &d, w.as_deref(), cfg)?;
    let ocr = score(&fit(&d, Method::Ocr)?, &d, w.as_deref(), cfg)?;
    Ok(ReplicationRecord { replication_index: index, ols, ocr })
}

/// Runs replication `index` of `cfg`; errors carry the index.
pub fn run_replication(cfg: &ScenarioConfig, index: usize) -> Result<ReplicationRecord> {
    replicate(cfg, index).map_err(|e| OcrError::Replication { index, source: Box::new(e) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        Self { mean: mean(values), sd: sample_sd(values) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSummary {
    pub estimate: Summary,
    pub bias: f64,
    /// `|bias| / sd(θ̂)`
    pub bsr: f64,
    pub coverage_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub mse: Summary,
    pub slope: Summary,
    pub intercept: Summary,
    pub theta: Option<ThetaSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub scenario: ScenarioConfig,
    pub ols: MethodSummary,
    pub ocr: MethodSummary,
}

impl StudyReport {
    pub fn method(&self, m: Method) -> &MethodSummary {
        match m {
            Method::Ols => &self.ols,
            Method::Ocr => &self.ocr,
        }
    }
}

fn summarize(cfg: &ScenarioConfig, records: &[ReplicationRecord], m: Method) -> MethodSummary {
    let rows: Vec<&MethodRecord> = records.iter().map(|r| r.method(m)).collect();
    let pick = |f: fn(&MethodRecord) -> f64| -> Vec<f64> { rows.iter().map(|r| f(r)).collect() };
    let theta = if cfg.study == Study::Downstream {
        let est: Vec<f64> = rows.iter().filter_map(|r| r.theta_hat).collect();
        let estimate = Summary::of(&est);
        let bias = estimate.mean - cfg.theta;
        let covered = rows.iter().filter(|r| r.ci_covers == Some(true)).count();
        Some(ThetaSummary {
            estimate,
            bias,
            bsr: bias.abs() / estimate.sd,
            coverage_pct: 100.0 * covered as f64 / rows.len() as f64,
        })
    } else {
        None
    };
    MethodSummary {
        method: m,
        mse: Summary::of(&pick(|r| r.mse)),
        slope: Summary::of(&pick(|r| r.calibration.slope)),
        intercept: Summary::of(&pick(|r| r.calibration.intercept)),
        theta,
    }
}

/// Aggregates replication records (any order) into a report.
pub fn aggregate(cfg: &ScenarioConfig, mut records: Vec<ReplicationRecord>) -> Result<StudyReport> {
    records.sort_by_key(|r| r.replication_index);
    if records.len() != cfg.replications || records.iter().enumerate().any(|(i, r)| r.replication_index != i) {
        return Err(OcrError::InvalidArgument("replication records do not cover 0..replications exactly once"));
    }
    Ok(StudyReport {
        scenario: cfg.clone(),
        ols: summarize(cfg, &records, Method::Ols),
        ocr: summarize(cfg, &records, Method::Ocr),
    })
}

/// Runs every replication sequentially, returning the records in order.
pub fn run_records(cfg: &ScenarioConfig) -> Result<Vec<ReplicationRecord>> {
    cfg.validate()?;
    (0..cfg.replications).map(|i| run_replication(cfg, i)).collect()
}

pub fn run_study(cfg: &ScenarioConfig) -> Result<StudyReport> {
    aggregate(cfg, run_records(cfg)?)
}

pub fn run_calibration_study(cfg: &ScenarioConfig) -> Result<StudyReport> {
    if cfg.study != Study::Calibration {
        return Err(OcrError::InvalidArgument("scenario is not a calibration study"));
    }
    run_study(cfg)
}

pub fn run_downstream_study(cfg: &ScenarioConfig) -> Result<StudyReport> {
    if cfg.study != Study::Downstream {
        return Err(OcrError::InvalidArgument("scenario is not a downstream study"));
    }
    run_study(cfg)
}

/// Points `(y, ŷ)` of one fit and the fitted calibration line. The identity
/// line `ŷ = y` is the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationScatter {
    pub method: Method,
    pub points: Vec<(f64, f64)>,
    pub line: CalibrationFit,
}

pub fn emit_calibration_scatter(m: &FittedModel, d: &Dataset) -> Result<CalibrationScatter> {
    let yhat = d.x().matvec(&m.beta)?;
    let line = calibration_fit(d.y(), &yhat)?;
    let points = d.y().iter().copied().zip(yhat).collect();
    Ok(CalibrationScatter { method: m.method, points, line })
}
