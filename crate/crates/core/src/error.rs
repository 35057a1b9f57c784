use alloc::boxed::Box;

pub type Result<T, E = OcrError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OcrError {
    #[error("matrix is not positive definite (pivot {pivot} collapsed)")]
    NotPositiveDefinite { pivot: usize },
    #[error("linear system is singular (effective rank below {size})")]
    SingularSystem { size: usize },
    #[error("iteration did not converge within {iterations} sweeps")]
    NoConvergence { iterations: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("invalid design shape n={n}, p={p} (need n > p >= 2)")]
    InvalidShape { n: usize, p: usize },
    #[error("outcome has (near) zero variance")]
    DegenerateOutcome,
    #[error("calibration constraints are rank deficient")]
    RankDeficientConstraints,
    #[error("constraint Gram matrix A (X'X)^-1 A' is singular")]
    SingularConstraintGram,
    #[error("residual degrees of freedom must be positive")]
    DegenerateDf,
    #[error("coefficient {index} has zero standard error")]
    ZeroStandardError { index: usize },
    #[error("regressor has (near) zero variance")]
    DegenerateRegressor,
    #[error("covariance matrix is not positive definite")]
    InvalidCovariance,
    #[error("index {index} out of range for {len} coefficients")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("leverage {0} is negative beyond round-off")]
    InconsistentLeverage(f64),
    #[error("replication {index} failed: {source}")]
    Replication { index: usize, source: Box<OcrError> },
}

impl OcrError {
    /// Strips any replication wrapper.
    pub fn root(&self) -> &OcrError {
        match self {
            OcrError::Replication { source, .. } => source.root(),
            other => other,
        }
    }
}
