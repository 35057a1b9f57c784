#![allow(dead_code)]

use ocr_core::numerics::standard_normal;
use ocr_core::{Dataset, Matrix, RandomSource};

pub fn uniform_usize(rs: &mut RandomSource, lo: usize, hi: usize) -> usize {
    lo + (rs.next_u64() % (hi - lo + 1) as u64) as usize
}

pub fn uniform(rs: &mut RandomSource, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rs.uniform_open0()
}

/// `y = X (0.5 · 1) + σ ε` with standard normal `X`.
pub fn linear_instance(rs: &mut RandomSource, n: usize, p: usize, sigma: f64) -> Dataset {
    let x = Matrix::new(n, p, standard_normal(rs, n * p)).unwrap();
    let eps = standard_normal(rs, n);
    let y = (0..n).map(|i| 0.5 * x.row(i).iter().sum::<f64>() + sigma * eps[i]).collect();
    Dataset::new(x, y).unwrap()
}

/// Like [`linear_instance`] but the last column is the previous one plus
/// `delta`-scaled noise, so `cond(XᵀX)` grows like `delta⁻²`.
pub fn collinear_instance(rs: &mut RandomSource, n: usize, p: usize, sigma: f64, delta: f64) -> Dataset {
    let mut data = standard_normal(rs, n * p);
    for i in 0..n {
        data[i * p + p - 1] = data[i * p + p - 2] + delta * data[i * p + p - 1];
    }
    let x = Matrix::new(n, p, data).unwrap();
    let eps = standard_normal(rs, n);
    let y = (0..n).map(|i| 0.5 * x.row(i).iter().sum::<f64>() + sigma * eps[i]).collect();
    Dataset::new(x, y).unwrap()
}

/// Random `(n, p, σ)` from the ranges `[20, 500] × [2, 10] × [0.1, 2]`.
pub fn random_instance(rs: &mut RandomSource) -> Dataset {
    let n = uniform_usize(rs, 20, 500);
    let p = uniform_usize(rs, 2, 10);
    let sigma = uniform(rs, 0.1, 2.0);
    linear_instance(rs, n, p, sigma)
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    diff / scale.max(f64::MIN_POSITIVE)
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().max_abs()
}
