//! Small dense helpers shared by the harmonic and metric code.

use nalgebra::DMatrix;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, &x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the mean.
pub fn project_mean_zero(a: &[f64]) -> Vec<f64> {
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter().map(|x| x - mean).collect()
}

/// `out = M x` for a row-major `q x q` matrix.
#[inline]
pub fn matvec_into(m: &[f64], q: usize, x: &[f64], out: &mut [f64]) {
    for (row, o) in m.chunks_exact(q).zip(out.iter_mut()) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// `x^T M x` for a row-major `q x q` matrix.
#[inline]
pub fn quad_form(m: &[f64], q: usize, x: &[f64]) -> f64 {
    m.chunks_exact(q)
        .zip(x)
        .map(|(row, xi)| xi * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
