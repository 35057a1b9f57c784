use std::path::PathBuf;

use ocr_core::OcrError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}: file has no header row or no data rows")]
    EmptyFile(PathBuf),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("model file: {0}")]
    CorruptModel(String),
    #[error("model file format_version {0} is not supported (expected 1)")]
    UnsupportedVersion(u64),
    #[error("scenario n={n} p={p} sigma={sigma}: {source}")]
    Scenario { n: usize, p: usize, sigma: f64, source: OcrError },
    #[error(transparent)]
    Numerical(#[from] OcrError),
}

pub mod exit {
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const EMPTY_FILE: i32 = 4;
    pub const MISSING_COLUMN: i32 = 5;
    pub const NON_NUMERIC: i32 = 6;
    pub const CORRUPT_MODEL: i32 = 7;
    pub const DIMENSION_MISMATCH: i32 = 8;
    pub const INVALID_DATA: i32 = 9;

    pub const NOT_POSITIVE_DEFINITE: i32 = 10;
    pub const SINGULAR_SYSTEM: i32 = 11;
    pub const NO_CONVERGENCE: i32 = 12;
    pub const DEGENERATE_OUTCOME: i32 = 13;
    pub const RANK_DEFICIENT_CONSTRAINTS: i32 = 14;
    pub const SINGULAR_CONSTRAINT_GRAM: i32 = 15;
    pub const DEGENERATE_DF: i32 = 16;
    pub const ZERO_STANDARD_ERROR: i32 = 17;
    pub const DEGENERATE_REGRESSOR: i32 = 18;
    pub const INVALID_COVARIANCE: i32 = 19;
    pub const INCONSISTENT_LEVERAGE: i32 = 20;
}

/// Variant name of a core error, used in diagnostics.
pub fn core_kind(e: &OcrError) -> &'static str {
    match e.root() {
        OcrError::NotPositiveDefinite { .. } => "NotPositiveDefinite",
        OcrError::SingularSystem { .. } => "SingularSystem",
        OcrError::NoConvergence { .. } => "NoConvergence",
        OcrError::TooFewObservations { .. } => "TooFewObservations",
        OcrError::InvalidProbability(_) => "InvalidProbability",
        OcrError::DimensionMismatch { .. } => "DimensionMismatch",
        OcrError::NonFinite => "NonFinite",
        OcrError::InvalidShape { .. } => "InvalidShape",
        OcrError::DegenerateOutcome => "DegenerateOutcome",
        OcrError::RankDeficientConstraints => "RankDeficientConstraints",
        OcrError::SingularConstraintGram => "SingularConstraintGram",
        OcrError::DegenerateDf => "DegenerateDf",
        OcrError::ZeroStandardError { .. } => "ZeroStandardError",
        OcrError::DegenerateRegressor => "DegenerateRegressor",
        OcrError::InvalidCovariance => "InvalidCovariance",
        OcrError::IndexOutOfRange { .. } => "IndexOutOfRange",
        OcrError::InvalidArgument(_) => "InvalidArgument",
        OcrError::InconsistentLeverage(_) => "InconsistentLeverage",
        OcrError::Replication { .. } => unreachable!("root() strips wrappers"),
    }
}

fn core_exit_code(e: &OcrError) -> i32 {
    use exit::*;
    match e.root() {
        OcrError::InvalidProbability(_) | OcrError::InvalidArgument(_) => CONFIG,
        OcrError::DimensionMismatch { .. } | OcrError::IndexOutOfRange { .. } => DIMENSION_MISMATCH,
        OcrError::TooFewObservations { .. } | OcrError::NonFinite | OcrError::InvalidShape { .. } => INVALID_DATA,
        OcrError::NotPositiveDefinite { .. } => NOT_POSITIVE_DEFINITE,
        OcrError::SingularSystem { .. } => SINGULAR_SYSTEM,
        OcrError::NoConvergence { .. } => NO_CONVERGENCE,
        OcrError::DegenerateOutcome => DEGENERATE_OUTCOME,
        OcrError::RankDeficientConstraints => RANK_DEFICIENT_CONSTRAINTS,
        OcrError::SingularConstraintGram => SINGULAR_CONSTRAINT_GRAM,
        OcrError::DegenerateDf => DEGENERATE_DF,
        OcrError::ZeroStandardError { .. } => ZERO_STANDARD_ERROR,
        OcrError::DegenerateRegressor => DEGENERATE_REGRESSOR,
        OcrError::InvalidCovariance => INVALID_COVARIANCE,
        OcrError::InconsistentLeverage(_) => INCONSISTENT_LEVERAGE,
        OcrError::Replication { .. } => unreachable!("root() strips wrappers"),
    }
}

impl CliError {
    /// Codes 2..=9 are configuration and input problems, 10 and up are
    /// numerical failures, one per error kind.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Csv { .. } => exit::IO,
            CliError::EmptyFile(_) => exit::EMPTY_FILE,
            CliError::MissingColumn(_) => exit::MISSING_COLUMN,
            CliError::NonNumericCell { .. } => exit::NON_NUMERIC,
            CliError::CorruptModel(_) | CliError::UnsupportedVersion(_) => exit::CORRUPT_MODEL,
            CliError::Scenario { source, .. } => core_exit_code(source),
            CliError::Numerical(e) => core_exit_code(e),
        }
    }

    /// One line, prefixed by the error kind.
    pub fn diagnostic(&self) -> String {
        let kind = match self {
            CliError::Config(_) => "Config",
            CliError::Io { .. } | CliError::Csv { .. } => "Io",
            CliError::EmptyFile(_) => "EmptyFile",
            CliError::MissingColumn(_) => "MissingColumn",
            CliError::NonNumericCell { .. } => "NonNumericCell",
            CliError::CorruptModel(_) | CliError::UnsupportedVersion(_) => "CorruptModel",
            CliError::Scenario { source, .. } | CliError::Numerical(source) => core_kind(source),
        };
        format!("error[{kind}]: {self}").replace('\n', " ")
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
