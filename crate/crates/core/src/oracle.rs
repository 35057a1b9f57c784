//! Brute-force reference implementations for tests.
//!
//! Nothing here touches the QR / Cholesky / closed-form route used by the
//! estimators: everything is Gaussian elimination or Gram–Schmidt on explicitly
//! formed matrices. Slow, which is fine for cross-checks.

use alloc::vec;
use alloc::vec::Vec;

use crate::estimators::{ConstraintSystem, Dataset};
use crate::numerics::matrix::Matrix;

/// Solves `M X = B` by Gauss–Jordan elimination with full row pivoting.
/// Returns `None` when a pivot vanishes.
pub fn gauss_solve_matrix(m: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    assert!(m.is_square() && b.rows() == n);
    let k = b.cols();
    let w = n + k;
    let mut aug = vec![0.0; n * w];
    for i in 0..n {
        aug[i * w..i * w + n].copy_from_slice(m.row(i));
        aug[i * w + n..(i + 1) * w].copy_from_slice(b.row(i));
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| aug[a * w + col].abs().total_cmp(&aug[b * w + col].abs()))?;
        if aug[piv * w + col].abs() <= 1e-300 * scale {
            return None;
        }
        for j in 0..w {
            aug.swap(col * w + j, piv * w + j);
        }
        let d = aug[col * w + col];
        for j in 0..w {
            aug[col * w + j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r * w + col];
                if f != 0.0 {
                    for j in 0..w {
                        aug[r * w + j] -= f * aug[col * w + j];
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(n * k);
    for i in 0..n {
        out.extend_from_slice(&aug[i * w + n..(i + 1) * w]);
    }
    Matrix::new(n, k, out).ok()
}

pub fn gauss_solve(m: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let bm = Matrix::new(b.len(), 1, b.to_vec()).ok()?;
    gauss_solve_matrix(m, &bm).map(|x| x.as_slice().to_vec())
}

pub fn gauss_inverse(m: &Matrix) -> Option<Matrix> {
    gauss_solve_matrix(m, &Matrix::identity(m.rows()))
}

/// OLS from the explicitly formed normal equations.
pub fn normal_equations_ols(d: &Dataset) -> Option<Vec<f64>> {
    let xt = d.x().transpose();
    let xtx = xt.matmul(d.x()).ok()?;
    let xty = xt.matvec(d.y()).ok()?;
    gauss_solve(&xtx, &xty)
}

/// Diagonal of the hat matrix `X (XᵀX)⁻¹ Xᵀ`.
pub fn hat_diagonal(x: &Matrix) -> Option<Vec<f64>> {
    let inv = gauss_inverse(&x.transpose().matmul(x).ok()?)?;
    let h = x.matmul(&inv).ok()?.matmul(&x.transpose()).ok()?;
    Some((0..x.rows()).map(|i| h[(i, i)]).collect())
}

/// `K = (XᵀX)⁻¹ Aᵀ (A (XᵀX)⁻¹ Aᵀ)⁻¹` evaluated term by term.
pub fn correction_matrix_direct(xtx: &Matrix, cs: &ConstraintSystem) -> Option<Matrix> {
    let inv = gauss_inverse(xtx)?;
    let at = cs.a.transpose();
    let inv_at = inv.matmul(&at).ok()?;
    let middle = gauss_inverse(&cs.a.matmul(&inv_at).ok()?)?;
    inv_at.matmul(&middle).ok()
}

/// Constrained inverse Gram `(XᵀX)⁻¹ − K A (XᵀX)⁻¹` evaluated term by term.
pub fn constrained_covariance_direct(xtx: &Matrix, cs: &ConstraintSystem) -> Option<Matrix> {
    let inv = gauss_inverse(xtx)?;
    let k = correction_matrix_direct(xtx, cs)?;
    inv.sub(&k.matmul(&cs.a).ok()?.matmul(&inv).ok()?).ok()
}

/// A particular solution of `A β = c` and an orthonormal basis of `Null(A)`,
/// built from modified Gram–Schmidt on the rows of `A` and then on the unit
/// vectors.
pub fn affine_parameterization(cs: &ConstraintSystem) -> Option<(Vec<f64>, Matrix)> {
    let p = cs.a.cols();
    // orthonormalize the constraint rows, tracking the triangular transform
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for k in 0..2 {
        let mut v = cs.a.row(k).to_vec();
        let mut r = cs.c[k];
        let norm0 = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        for (u, s) in q.iter().zip(&rhs) {
            let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
            r -= proj * s;
        }
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if !(norm > 1e-12 * norm0) {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        q.push(v);
        rhs.push(r / norm);
    }
    let mut particular = vec![0.0; p];
    for (u, s) in q.iter().zip(&rhs) {
        for (b, ui) in particular.iter_mut().zip(u) {
            *b += s * ui;
        }
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut all = q.clone();
    for e in 0..p {
        if basis.len() == p - 2 {
            break;
        }
        let mut v = vec![0.0; p];
        v[e] = 1.0;
        for _ in 0..2 {
            for u in &all {
                let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            all.push(v.clone());
            basis.push(v);
        }
    }
    let mut n = Matrix::zeros(p, p - 2);
    for (j, v) in basis.iter().enumerate() {
        for i in 0..p {
            n[(i, j)] = v[i];
        }
    }
    Some((particular, n))
}

/// Least squares by modified Gram–Schmidt with one reorthogonalization pass.
pub fn mgs_least_squares(x: &Matrix, y: &[f64]) -> Option<Vec<f64>> {
    let (n, k) = (x.rows(), x.cols());
    let mut q: Vec<Vec<f64>> = (0..k).map(|j| x.column(j)).collect();
    let mut r = Matrix::zeros(k, k);
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let proj: f64 = (0..n).map(|t| q[i][t] * q[j][t]).sum();
                r[(i, j)] += proj;
                for t in 0..n {
                    q[j][t] -= proj * q[i][t];
                }
            }
        }
        let norm = libm::sqrt(q[j].iter().map(|v| v * v).sum::<f64>());
        if !(norm > 0.0) {
            return None;
        }
        r[(j, j)] = norm;
        q[j].iter_mut().for_each(|v| *v /= norm);
    }
    let mut rhs: Vec<f64> = y.to_vec();
    let mut qty = vec![0.0; k];
    for j in 0..k {
        qty[j] = (0..n).map(|t| q[j][t] * rhs[t]).sum();
        for t in 0..n {
            rhs[t] -= qty[j] * q[j][t];
        }
    }
    let mut z = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[(i, j)] * z[j]).sum();
        z[i] = (qty[i] - s) / r[(i, i)];
    }
    Some(z)
}

/// Minimizes `‖y − Xβ‖²` over `{β : Aβ = c}` via `β = β₀ + N z` and an
/// unconstrained least-squares solve for `z`.
pub fn null_space_ocr(d: &Dataset, cs: &ConstraintSystem) -> Option<Vec<f64>> {
    let (beta0, n) = affine_parameterization(cs)?;
    if n.cols() == 0 {
        return Some(beta0);
    }
    let x = d.x();
    let xn = x.matmul(&n).ok()?;
    let x_beta0 = x.matvec(&beta0).ok()?;
    let r: Vec<f64> = d.y().iter().zip(&x_beta0).map(|(a, b)| a - b).collect();
    let z = mgs_least_squares(&xn, &r)?;
    let nz = n.matvec(&z).ok()?;
    Some(beta0.iter().zip(&nz).map(|(a, b)| a + b).collect())
}

/// Calibration slope and intercept by the two-parameter normal equations.
pub fn calibration_direct(y: &[f64], yhat: &[f64]) -> Option<(f64, f64)> {
    let n = y.len() as f64;
    let sy: f64 = y.iter().sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sh: f64 = yhat.iter().sum();
    let syh: f64 = y.iter().zip(yhat).map(|(a, b)| a * b).sum();
    let m = Matrix::from_rows(&[[n, sy], [sy, syy]]).ok()?;
    let sol = gauss_solve(&m, &[sh, syh])?;
    Some((sol[1], sol[0]))
}
