//! Dense factorizations: Cholesky (also obtainable from a Householder QR of the
//! design, which never forms XᵀX), partially pivoted LU for symmetric indefinite
//! saddle-point systems, and cyclic Jacobi for symmetric eigenvalues.

use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{dot, Matrix};
use crate::error::{OcrError, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Lower-triangular factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix.
    ///
    /// A pivot at or below `p · ε · max diag(M)` is reported as
    /// [`OcrError::NotPositiveDefinite`].
    pub fn factor(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(OcrError::DimensionMismatch { expected: m.rows(), got: m.cols() });
        }
        if !m.is_symmetric(SYMMETRY_TOL) {
            return Err(OcrError::InvalidArgument("matrix is not symmetric"));
        }
        let p = m.rows();
        let max_diag = (0..p).fold(0.0f64, |a, i| a.max(m[(i, i)]));
        let floor = p as f64 * f64::EPSILON * max_diag;
        let mut l = Matrix::zeros(p, p);
        for j in 0..p {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(OcrError::NotPositiveDefinite { pivot: j });
            }
            let ljj = libm::sqrt(d);
            l[(j, j)] = ljj;
            for i in j + 1..p {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    /// Factor of `XᵀX` computed from a Householder QR of `X`.
    ///
    /// The collapse criterion is the same as [`Cholesky::factor`] applied to
    /// `XᵀX`, but the factor carries the conditioning of `X` rather than its
    /// square.
    pub fn of_gram(x: &Matrix) -> Result<Self> {
        Self::from_qr(&HouseholderQr::factor(x)?, x)
    }

    /// As [`Cholesky::of_gram`], reusing an existing factorization of `x`.
    pub fn from_qr(qr: &HouseholderQr, x: &Matrix) -> Result<Self> {
        let p = x.cols();
        let max_diag = (0..p)
            .map(|j| {
                let c = x.column(j);
                dot(&c, &c)
            })
            .fold(0.0f64, f64::max);
        let floor = p as f64 * f64::EPSILON * max_diag;
        let mut l = Matrix::zeros(p, p);
        for i in 0..p {
            let rii = qr.r_entry(i, i);
            if !(rii * rii > floor) {
                return Err(OcrError::NotPositiveDefinite { pivot: i });
            }
            let sign = if rii < 0.0 { -1.0 } else { 1.0 };
            for j in i..p {
                l[(j, i)] = sign * qr.r_entry(i, j);
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L z = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let p = self.dim();
        let mut z = b.to_vec();
        for i in 0..p {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }

    /// Solves `Lᵀ x = z`.
    pub fn solve_upper(&self, z: &[f64]) -> Vec<f64> {
        let p = self.dim();
        let mut x = z.to_vec();
        for i in (0..p).rev() {
            let mut s = x[i];
            for k in i + 1..p {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(OcrError::DimensionMismatch { expected: self.dim(), got: b.len() });
        }
        Ok(self.solve_upper(&self.solve_lower(b)))
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.dim() {
            return Err(OcrError::DimensionMismatch { expected: self.dim(), got: b.rows() });
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.column(j))?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// Explicit inverse. Only used where a full matrix is part of the output.
    pub fn inverse(&self) -> Matrix {
        let p = self.dim();
        let mut inv = self.solve_matrix(&Matrix::identity(p)).expect("square identity");
        inv.symmetrize();
        inv
    }

    /// Squared ratio of the extreme diagonal entries of `L`, a cheap lower
    /// bound on the 2-norm condition number of `L Lᵀ`.
    pub fn condition_estimate(&self) -> f64 {
        let (lo, hi) =
            (0..self.dim()).map(|i| self.l[(i, i)]).fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let r = hi / lo;
        r * r
    }
}

/// Householder QR of a tall matrix, `X = Q R`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    /// Reflectors below the diagonal, `R` on and above it.
    packed: Matrix,
    betas: Vec<f64>,
}

impl HouseholderQr {
    pub fn factor(x: &Matrix) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if n < p {
            return Err(OcrError::InvalidShape { n, p });
        }
        let mut a = x.clone();
        let mut betas = vec![0.0; p];
        for k in 0..p {
            let mut norm = 0.0;
            for i in k..n {
                norm += a[(i, k)] * a[(i, k)];
            }
            let norm = libm::sqrt(norm);
            if norm == 0.0 {
                continue;
            }
            let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
            // v = x - alpha e1, applied as I - beta v vᵀ
            a[(k, k)] -= alpha;
            let v0 = a[(k, k)];
            let mut vtv = 0.0;
            for i in k..n {
                vtv += a[(i, k)] * a[(i, k)];
            }
            let beta = 2.0 / vtv;
            for j in k + 1..p {
                let mut s = 0.0;
                for i in k..n {
                    s += a[(i, k)] * a[(i, j)];
                }
                let s = s * beta;
                for i in k..n {
                    let vik = a[(i, k)];
                    a[(i, j)] -= s * vik;
                }
            }
            // store v / v0 below the diagonal (unit leading entry implied)
            a[(k, k)] = alpha;
            for i in k + 1..n {
                a[(i, k)] /= v0;
            }
            betas[k] = beta * v0 * v0;
        }
        Ok(Self { packed: a, betas })
    }

    fn r_entry(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.packed[(i, j)]
        }
    }

    pub fn r(&self) -> Matrix {
        let p = self.packed.cols();
        let mut r = Matrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                r[(i, j)] = self.packed[(i, j)];
            }
        }
        r
    }

    /// Applies `Qᵀ` to a length-`n` vector.
    pub fn qt_mul(&self, y: &[f64]) -> Result<Vec<f64>> {
        let (n, p) = (self.packed.rows(), self.packed.cols());
        if y.len() != n {
            return Err(OcrError::DimensionMismatch { expected: n, got: y.len() });
        }
        let mut out = y.to_vec();
        for k in 0..p {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut s = out[k];
            for i in k + 1..n {
                s += self.packed[(i, k)] * out[i];
            }
            let s = s * beta;
            out[k] -= s;
            for i in k + 1..n {
                out[i] -= s * self.packed[(i, k)];
            }
        }
        Ok(out)
    }

    /// Least-squares solution of `X b ≈ y`.
    pub fn solve_least_squares(&self, y: &[f64]) -> Result<Vec<f64>> {
        let p = self.packed.cols();
        let qty = self.qt_mul(y)?;
        let mut b = qty[..p].to_vec();
        for i in (0..p).rev() {
            let rii = self.packed[(i, i)];
            if rii == 0.0 {
                return Err(OcrError::SingularSystem { size: p });
            }
            let mut s = b[i];
            for k in i + 1..p {
                s -= self.packed[(i, k)] * b[k];
            }
            b[i] = s / rii;
        }
        Ok(b)
    }
}

/// Solves `M x = b` for symmetric positive-definite `M` via Cholesky.
pub fn solve_spd(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if m.rows() == 0 {
        return Err(OcrError::InvalidArgument("empty matrix"));
    }
    Cholesky::factor(m)?.solve(b)
}

/// Solves `M x = b` for a symmetric, possibly indefinite `M` (for example a
/// KKT saddle-point matrix) using LU with partial pivoting.
pub fn solve_symmetric_indefinite(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let size = m.rows();
    if size == 0 || !m.is_square() {
        return Err(OcrError::InvalidArgument("matrix must be square and non-empty"));
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(OcrError::InvalidArgument("matrix is not symmetric"));
    }
    if b.len() != size {
        return Err(OcrError::DimensionMismatch { expected: size, got: b.len() });
    }
    let floor = size as f64 * f64::EPSILON * m.max_abs();
    let mut a = m.clone();
    let mut x = b.to_vec();
    for k in 0..size {
        let (piv, pmax) =
            (k..size)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmax > floor) {
            return Err(OcrError::SingularSystem { size });
        }
        if piv != k {
            for j in 0..size {
                let t = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = t;
            }
            x.swap(k, piv);
        }
        let d = a[(k, k)];
        for i in k + 1..size {
            let f = a[(i, k)] / d;
            if f == 0.0 {
                continue;
            }
            for j in k..size {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..size).rev() {
        let mut s = x[i];
        for j in i + 1..size {
            s -= a[(i, j)] * x[j];
        }
        x[i] = s / a[(i, i)];
    }
    Ok(x)
}

/// All eigenvalues of a symmetric matrix, ascending (cyclic Jacobi).
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(OcrError::DimensionMismatch { expected: m.rows(), got: m.cols() });
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(OcrError::InvalidArgument("matrix is not symmetric"));
    }
    let n = m.rows();
    let mut a = m.clone();
    a.symmetrize();
    let frob = libm::sqrt(a.as_slice().iter().map(|v| v * v).sum::<f64>());
    let target = f64::EPSILON * frob;
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = libm::sqrt((0..n).map(|i| (0..i).map(|j| 2.0 * a[(i, j)] * a[(i, j)]).sum::<f64>()).sum::<f64>());
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    a[(k, p)] = new_p;
                    a[(p, k)] = new_p;
                    a[(k, q)] = new_q;
                    a[(q, k)] = new_q;
                }
            }
        }
    }
    if !converged {
        return Err(OcrError::NoConvergence { iterations: JACOBI_MAX_SWEEPS });
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn min_eigenvalue_symmetric(m: &Matrix) -> Result<f64> {
    symmetric_eigenvalues(m)?.first().copied().ok_or(OcrError::InvalidArgument("empty matrix"))
}
