//! Numerical kernels shared by every other module.

pub mod linalg;
pub mod matrix;
pub mod random;
pub mod special;
pub mod stats;

pub use linalg::{min_eigenvalue_symmetric, solve_spd, solve_symmetric_indefinite, symmetric_eigenvalues, Cholesky};
pub use matrix::Matrix;
pub use random::{standard_normal, RandomSource};
pub use special::{t_cdf, t_quantile};
pub use stats::{mean, sample_covariance, sample_variance};
