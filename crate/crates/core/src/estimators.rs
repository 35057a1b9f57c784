//! OLS and outcome-calibrated (OCR) least squares.
//!
//! The OCR estimator minimises `‖y − Xβ‖²` subject to `Aβ = c`, where the two
//! rows of the constraint force the regression of the fitted values on the
//! observed outcome to have slope one and intercept zero:
//!
//! ```text
//! A = [ (y − ȳ1)ᵀX ]      c = [ (y − ȳ1)ᵀy ]
//!     [ (1/n) 1ᵀX  ]          [ ȳ          ]
//! ```
//!
//! The primary solve is the closed form `β = β_ols − K (A β_ols − c)` with
//! `K = (XᵀX)⁻¹Aᵀ (A (XᵀX)⁻¹ Aᵀ)⁻¹`. All `(XᵀX)⁻¹` products go through a
//! triangular factor of `XᵀX` taken from a Householder QR of `X`.

use alloc::vec;
use alloc::vec::Vec;

use crate::calibration::{calibration_fit, CalibrationFit};
use crate::error::{OcrError, Result};
use crate::numerics::linalg::{solve_symmetric_indefinite, Cholesky, HouseholderQr};
use crate::numerics::matrix::{dot, norm2, Matrix};
use crate::numerics::stats::{mean, sample_variance};

/// Above this estimated condition number of `XᵀX` the closed form is replaced
/// by a direct solve of the saddle-point system.
pub const KKT_FALLBACK_CONDITION: f64 = 1e10;
const KKT_REFINEMENT_STEPS: usize = 3;

/// Relative floor on the smaller singular value of `A`.
const CONSTRAINT_RANK_TOL: f64 = 1e-10;

/// Relative floor on `Var(y)`.
const DEGENERATE_OUTCOME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ols,
    Ocr,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Ocr => "ocr",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Method::Ols => "OLS",
            Method::Ocr => "OCR",
        })
    }
}

impl core::str::FromStr for Method {
    type Err = OcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" | "OLS" => Ok(Method::Ols),
            "ocr" | "OCR" => Ok(Method::Ocr),
            _ => Err(OcrError::InvalidArgument("method must be `ols` or `ocr`")),
        }
    }
}

/// Training data `(X, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    has_intercept_column: bool,
}

impl Dataset {
    /// Requires `n > p >= 2` and finite entries.
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if y.len() != n {
            return Err(OcrError::DimensionMismatch { expected: n, got: y.len() });
        }
        if !(n > p && p >= 2) {
            return Err(OcrError::InvalidShape { n, p });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(OcrError::NonFinite);
        }
        Ok(Self { x, y, has_intercept_column: false })
    }

    /// Prepends an all-ones column to `x`.
    pub fn with_intercept(x: &Matrix, y: Vec<f64>) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        let mut data = Vec::with_capacity(n * (p + 1));
        for i in 0..n {
            data.push(1.0);
            data.extend_from_slice(x.row(i));
        }
        let mut d = Self::new(Matrix::new(n, p + 1, data)?, y)?;
        d.has_intercept_column = true;
        Ok(d)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn has_intercept_column(&self) -> bool {
        self.has_intercept_column
    }
}

/// Linear calibration constraints `A β = c` (two rows).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub a: Matrix,
    pub c: [f64; 2],
}

impl ConstraintSystem {
    /// `A β − c`.
    pub fn violation(&self, beta: &[f64]) -> Result<[f64; 2]> {
        let ab = self.a.matvec(beta)?;
        Ok([ab[0] - self.c[0], ab[1] - self.c[1]])
    }

    pub fn row(&self, k: usize) -> &[f64] {
        self.a.row(k)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitDiagnostics {
    /// The closed form was abandoned for the saddle-point solve.
    pub fallback_kkt: bool,
    /// Multipliers `ν` of the Lagrangian `(1/2n)‖y − Xβ‖² + νᵀ(Aβ − c)`.
    pub multipliers: Option<[f64; 2]>,
    /// Estimated condition number of `XᵀX`.
    pub gram_condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub method: Method,
    pub beta: Vec<f64>,
    pub constraint: Option<ConstraintSystem>,
    pub rss: f64,
    pub residual_df: usize,
    pub sigma2_hat: f64,
    pub coef_cov: Matrix,
    pub calibration: CalibrationFit,
    pub n: usize,
    pub p: usize,
    pub xtx: Matrix,
    pub diagnostics: FitDiagnostics,
}

impl FittedModel {
    pub fn fitted_values(&self, x: &Matrix) -> Result<Vec<f64>> {
        predict(self, x)
    }
}

/// Builds the calibration constraint system for `d`.
pub fn build_constraints(d: &Dataset) -> Result<ConstraintSystem> {
    let (x, y) = (d.x(), d.y());
    let n = d.n() as f64;
    let ybar = mean(y);
    let var_y = sample_variance(y)?;
    if !(var_y > DEGENERATE_OUTCOME_TOL * (ybar * ybar + 1.0)) {
        return Err(OcrError::DegenerateOutcome);
    }
    let centered: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let row1 = x.tr_matvec(&centered)?;
    let ones = vec![1.0 / n; d.n()];
    let row2 = x.tr_matvec(&ones)?;
    let c1 = dot(&centered, y);

    let mut data = row1;
    data.extend_from_slice(&row2);
    let a = Matrix::new(2, d.p(), data)?;
    let (smin, smax) = two_row_singular_values(a.row(0), a.row(1));
    if !(smin > CONSTRAINT_RANK_TOL * smax) {
        return Err(OcrError::RankDeficientConstraints);
    }
    Ok(ConstraintSystem { a, c: [c1, ybar] })
}

/// Singular values `(σ_min, σ_max)` of the 2×p matrix with rows `r1`, `r2`.
///
/// Uses `σ_min σ_max = ‖r1‖ · dist(r2, span r1)` (Gram–Schmidt) and
/// `σ_min² + σ_max² = ‖A‖_F²`, which keeps the small value accurate.
fn two_row_singular_values(r1: &[f64], r2: &[f64]) -> (f64, f64) {
    let n1 = norm2(r1);
    let n2 = norm2(r2);
    if n1 == 0.0 || n2 == 0.0 {
        return (0.0, n1.max(n2));
    }
    let proj = dot(r1, r2) / (n1 * n1);
    let resid: Vec<f64> = r1.iter().zip(r2).map(|(a, b)| b - proj * a).collect();
    let det = n1 * norm2(&resid);
    let frob2 = n1 * n1 + n2 * n2;
    let disc = libm::sqrt(((frob2 - 2.0 * det) * (frob2 + 2.0 * det)).max(0.0));
    let smax = libm::sqrt(0.5 * (frob2 + disc));
    (det / smax, smax)
}

fn residual_sum_of_squares(d: &Dataset, beta: &[f64]) -> Result<f64> {
    let fitted = d.x().matvec(beta)?;
    Ok(d.y().iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum())
}

/// Ordinary least squares.
pub fn fit_ols(d: &Dataset) -> Result<FittedModel> {
    let qr = HouseholderQr::factor(d.x())?;
    let factor = Cholesky::from_qr(&qr, d.x())?;
    let beta = qr.solve_least_squares(d.y())?;
    let (n, p) = (d.n(), d.p());
    let rss = residual_sum_of_squares(d, &beta)?;
    let residual_df = n - p;
    let sigma2_hat = rss / residual_df as f64;
    let mut coef_cov = factor.inverse().scale(sigma2_hat);
    coef_cov.symmetrize();
    let fitted = d.x().matvec(&beta)?;
    let calibration = calibration_fit(d.y(), &fitted)?;
    Ok(FittedModel {
        method: Method::Ols,
        beta,
        constraint: None,
        rss,
        residual_df,
        sigma2_hat,
        coef_cov,
        calibration,
        n,
        p,
        xtx: d.x().gram(),
        diagnostics: FitDiagnostics { gram_condition: factor.condition_estimate(), ..Default::default() },
    })
}

/// Solves `(A (XᵀX)⁻¹ Aᵀ) u = v` given the factor of `XᵀX`.
///
/// The rows of `A` live on very different scales (the slope row grows with
/// `n · Var(y)`, the mean row does not), so the 2×2 system is solved after
/// symmetric diagonal scaling.
pub(crate) struct ConstraintGram {
    /// `L⁻¹ Aᵀ`, column k = L⁻¹ a_k
    pub(crate) g: [Vec<f64>; 2],
    m: [[f64; 2]; 2],
}

impl ConstraintGram {
    pub(crate) fn new(factor: &Cholesky, cs: &ConstraintSystem) -> Result<Self> {
        let g = [factor.solve_lower(cs.row(0)), factor.solve_lower(cs.row(1))];
        let m = [[dot(&g[0], &g[0]), dot(&g[0], &g[1])], [dot(&g[1], &g[0]), dot(&g[1], &g[1])]];
        if !(m[0][0] > 0.0 && m[1][1] > 0.0) {
            return Err(OcrError::SingularConstraintGram);
        }
        // correlation-scaled determinant; 1 − r² must be resolvable
        let r = m[0][1] / libm::sqrt(m[0][0] * m[1][1]);
        if !(1.0 - r * r > 64.0 * f64::EPSILON) {
            return Err(OcrError::SingularConstraintGram);
        }
        Ok(Self { g, m })
    }

    pub(crate) fn solve(&self, v: [f64; 2]) -> [f64; 2] {
        let s0 = 1.0 / libm::sqrt(self.m[0][0]);
        let s1 = 1.0 / libm::sqrt(self.m[1][1]);
        let r = self.m[0][1] * s0 * s1;
        let det = 1.0 - r * r;
        let (w0, w1) = (v[0] * s0, v[1] * s1);
        let u0 = (w0 - r * w1) / det;
        let u1 = (w1 - r * w0) / det;
        [u0 * s0, u1 * s1]
    }
}

/// Calibration correction matrix `K = (XᵀX)⁻¹Aᵀ(A(XᵀX)⁻¹Aᵀ)⁻¹` (p×2), a right
/// inverse of `A`.
pub fn correction_matrix(xtx: &Matrix, cs: &ConstraintSystem) -> Result<Matrix> {
    let factor = Cholesky::factor(xtx)?;
    correction_from_factor(&factor, cs)
}

fn correction_from_factor(factor: &Cholesky, cs: &ConstraintSystem) -> Result<Matrix> {
    let p = factor.dim();
    if cs.a.cols() != p {
        return Err(OcrError::DimensionMismatch { expected: p, got: cs.a.cols() });
    }
    let cg = ConstraintGram::new(factor, cs)?;
    // columns of (XᵀX)⁻¹Aᵀ
    let h = [factor.solve_upper(&cg.g[0]), factor.solve_upper(&cg.g[1])];
    // K = H M⁻¹, row by row: K_i = M⁻¹ (H_i0, H_i1) since M is symmetric
    let mut k = Matrix::zeros(p, 2);
    for i in 0..p {
        let row = cg.solve([h[0][i], h[1][i]]);
        k[(i, 0)] = row[0];
        k[(i, 1)] = row[1];
    }
    Ok(k)
}

/// `P = K A` and `Q = I − P`.
pub fn projection_operators(xtx: &Matrix, cs: &ConstraintSystem) -> Result<(Matrix, Matrix)> {
    let k = correction_matrix(xtx, cs)?;
    let p_mat = k.matmul(&cs.a)?;
    let q_mat = Matrix::identity(xtx.rows()).sub(&p_mat)?;
    Ok((p_mat, q_mat))
}

/// `(XᵀX)⁻¹ − (XᵀX)⁻¹Aᵀ(A(XᵀX)⁻¹Aᵀ)⁻¹A(XᵀX)⁻¹`, the OCR covariance per unit
/// noise variance. Exactly zero when `p = 2` (coefficients are pinned by the
/// constraints).
pub(crate) fn constrained_inverse_gram(factor: &Cholesky, cs: &ConstraintSystem) -> Result<Matrix> {
    let p = factor.dim();
    if p == 2 {
        return Ok(Matrix::zeros(2, 2));
    }
    let cg = ConstraintGram::new(factor, cs)?;
    let h = [factor.solve_upper(&cg.g[0]), factor.solve_upper(&cg.g[1])];
    let mut out = factor.inverse();
    for i in 0..p {
        let ki = cg.solve([h[0][i], h[1][i]]);
        for j in 0..p {
            out[(i, j)] -= ki[0] * h[0][j] + ki[1] * h[1][j];
        }
    }
    out.symmetrize();
    Ok(out)
}

/// Outcome-calibrated regression.
pub fn fit_ocr(d: &Dataset) -> Result<FittedModel> {
    let cs = build_constraints(d)?;
    let qr = HouseholderQr::factor(d.x())?;
    let factor = Cholesky::from_qr(&qr, d.x())?;
    let (n, p) = (d.n(), d.p());
    let gram_condition = factor.condition_estimate();

    let mut diagnostics = FitDiagnostics { gram_condition, ..Default::default() };
    let beta = if p == 2 {
        // A is square: the constraints alone determine β
        let sol = solve_square_constraints(&cs)?;
        let ols = qr.solve_least_squares(d.y())?;
        diagnostics.multipliers = Some(multipliers_from_stationarity(d, &cs, &sol, &ols)?);
        sol
    } else if gram_condition > KKT_FALLBACK_CONDITION {
        diagnostics.fallback_kkt = true;
        let (beta, nu) = solve_kkt(d, &cs)?;
        diagnostics.multipliers = Some(nu);
        beta
    } else {
        let ols = qr.solve_least_squares(d.y())?;
        let cg = ConstraintGram::new(&factor, &cs)?;
        let u = cg.solve(cs.violation(&ols)?);
        // β = β_ols − (XᵀX)⁻¹Aᵀ u
        let at_u: Vec<f64> = (0..p).map(|j| cs.a[(0, j)] * u[0] + cs.a[(1, j)] * u[1]).collect();
        let step = factor.solve(&at_u)?;
        diagnostics.multipliers = Some([u[0] / n as f64, u[1] / n as f64]);
        ols.iter().zip(&step).map(|(b, s)| b - s).collect()
    };

    let rss = residual_sum_of_squares(d, &beta)?;
    let residual_df = n - p + 2;
    let sigma2_hat = rss / residual_df as f64;
    let coef_cov = constrained_inverse_gram(&factor, &cs)?.scale(sigma2_hat);
    let fitted = d.x().matvec(&beta)?;
    let calibration = calibration_fit(d.y(), &fitted)?;
    Ok(FittedModel {
        method: Method::Ocr,
        beta,
        constraint: Some(cs),
        rss,
        residual_df,
        sigma2_hat,
        coef_cov,
        calibration,
        n,
        p,
        xtx: d.x().gram(),
        diagnostics,
    })
}

/// Fits with the requested method.
pub fn fit(d: &Dataset, method: Method) -> Result<FittedModel> {
    match method {
        Method::Ols => fit_ols(d),
        Method::Ocr => fit_ocr(d),
    }
}

/// Solves `A β = c` for square (2×2) `A` with partial pivoting.
fn solve_square_constraints(cs: &ConstraintSystem) -> Result<Vec<f64>> {
    let (a, b, c, d) = (cs.a[(0, 0)], cs.a[(0, 1)], cs.a[(1, 0)], cs.a[(1, 1)]);
    // scale rows to unit max so the pivot comparison is meaningful
    let s0 = a.abs().max(b.abs());
    let s1 = c.abs().max(d.abs());
    let (a, b, r0) = (a / s0, b / s0, cs.c[0] / s0);
    let (c, d, r1) = (c / s1, d / s1, cs.c[1] / s1);
    let det = a * d - b * c;
    if !(det.abs() > 4.0 * f64::EPSILON) {
        return Err(OcrError::RankDeficientConstraints);
    }
    Ok(vec![(r0 * d - b * r1) / det, (a * r1 - c * r0) / det])
}

/// Direct solve of
/// ```text
/// [ XᵀX/n  Aᵀ ] [β]   [Xᵀy/n]
/// [ A      0  ] [ν] = [c    ]
/// ```
fn solve_kkt(d: &Dataset, cs: &ConstraintSystem) -> Result<(Vec<f64>, [f64; 2])> {
    let (n, p) = (d.n() as f64, d.p());
    let size = p + 2;
    let xtx = d.x().gram();
    let xty = d.x().tr_matvec(d.y())?;
    let mut m = Matrix::zeros(size, size);
    let mut rhs = vec![0.0; size];
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = xtx[(i, j)] / n;
        }
        for k in 0..2 {
            m[(i, p + k)] = cs.a[(k, i)];
            m[(p + k, i)] = cs.a[(k, i)];
        }
        rhs[i] = xty[i] / n;
    }
    rhs[p] = cs.c[0];
    rhs[p + 1] = cs.c[1];
    let mut sol = solve_symmetric_indefinite(&m, &rhs)?;
    // iterative refinement, with the residual taken against X rather than XᵀX
    for _ in 0..KKT_REFINEMENT_STEPS {
        let (beta, nu) = (&sol[..p], [sol[p], sol[p + 1]]);
        let fitted = d.x().matvec(beta)?;
        let resid: Vec<f64> = d.y().iter().zip(&fitted).map(|(y, f)| y - f).collect();
        let grad = d.x().tr_matvec(&resid)?;
        let at_nu = cs.a.tr_matvec(&nu)?;
        let viol = cs.violation(beta)?;
        let mut r: Vec<f64> = (0..p).map(|j| grad[j] / n - at_nu[j]).collect();
        r.push(-viol[0]);
        r.push(-viol[1]);
        let delta = solve_symmetric_indefinite(&m, &r)?;
        sol.iter_mut().zip(&delta).for_each(|(s, d)| *s += d);
    }
    Ok((sol[..p].to_vec(), [sol[p], sol[p + 1]]))
}

/// Least-squares multipliers for the stationarity condition when β is known.
fn multipliers_from_stationarity(d: &Dataset, cs: &ConstraintSystem, beta: &[f64], ols: &[f64]) -> Result<[f64; 2]> {
    // XᵀX(β − β_ols)/n + Aᵀν = 0, solved for ν in the least-squares sense
    let n = d.n() as f64;
    let xtx = d.x().gram();
    let diff: Vec<f64> = beta.iter().zip(ols).map(|(b, o)| b - o).collect();
    let g: Vec<f64> = xtx.matvec(&diff)?.iter().map(|v| -v / n).collect();
    let aat = cs.a.matmul(&cs.a.transpose())?;
    let rhs = cs.a.matvec(&g)?;
    let nu = solve_symmetric_indefinite(&aat, &rhs)?;
    Ok([nu[0], nu[1]])
}

/// `X_new β`.
pub fn predict(m: &FittedModel, x_new: &Matrix) -> Result<Vec<f64>> {
    if x_new.cols() != m.p {
        return Err(OcrError::DimensionMismatch { expected: m.p, got: x_new.cols() });
    }
    x_new.matvec(&m.beta)
}
