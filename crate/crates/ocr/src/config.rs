//! Optional TOML run configuration. Keys mirror the long flag names; a flag
//! given on the command line replaces the file value.

use std::path::{Path, PathBuf};

use ocr_core::simulation::{ScenarioConfig, Study, DEFAULT_SEED};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "OCR_SEED";
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub outcome: Option<String>,
    pub w_column: Option<String>,
    pub method: Option<String>,
    pub level: Option<f64>,
    pub seed: Option<u64>,
    pub intercept: Option<bool>,
    pub model_out: Option<PathBuf>,
    pub model_in: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub scenario_grid: Option<String>,
    pub replications: Option<usize>,
    pub per_replication_dump: Option<PathBuf>,
    pub scatter_out: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub scenario: Vec<ScenarioEntry>,
}

/// One `[[scenario]]` table of a custom grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioEntry {
    #[serde(default)]
    pub study: Option<String>,
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    pub theta: Option<f64>,
    pub sigma_w: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

impl ScenarioEntry {
    pub fn to_scenario(&self, replications: usize, seed: u64) -> Result<ScenarioConfig> {
        let study: Study = match &self.study {
            Some(s) => s.parse().map_err(|_| CliError::Config(format!("unknown study `{s}`")))?,
            None => Study::Calibration,
        };
        let mut cfg = match study {
            Study::Calibration => ScenarioConfig::calibration(self.n, self.p, self.sigma),
            Study::Downstream => ScenarioConfig::downstream(self.n, self.p, self.sigma),
        };
        if let Some(t) = self.theta {
            cfg.theta = t;
        }
        if let Some(s) = self.sigma_w {
            cfg.sigma_w = s;
        }
        Ok(cfg.with_replications(replications).with_seed(seed))
    }
}

/// Flag, then config file, then `OCR_SEED`, then the built-in default.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match env {
        Some(v) => {
            v.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))
        }
        None => Ok(DEFAULT_SEED),
    }
}

pub fn check_level(level: f64) -> Result<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(CliError::Config(format!("--level {level} must lie strictly between 0 and 1")))
    }
}

pub fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Config(format!("missing required `--{flag}` (flag or config key)")))
}
