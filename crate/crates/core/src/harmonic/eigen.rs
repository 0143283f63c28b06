use nalgebra::{DMatrix, DVector};

use super::HarmonicStructure;
use crate::error::{Error, Result};
use crate::linalg;

const EIGENVALUE_TOL: f64 = 1e-8;
const INVERSE_ITERATIONS: usize = 60;

/// Eigendata attached to the letter `i` fixing the boundary point `p_label`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointData {
    pub label: usize,
    pub letter: usize,
    /// `A_i v = r_i v`, `v >= 0`, `v(p_i) = 0`, `(u, v) = 1`.
    pub v: Vec<f64>,
    /// Column of `D` at `p_i`; eigenvector of `A_i^T` for `r_i`.
    pub u: Vec<f64>,
    pub eigen_residual: f64,
    pub adjoint_residual: f64,
}

/// Shifted inverse iteration on `A_i` with the `p_i` coordinate deflated.
pub(super) fn fixed_point_eigendata(hs: &HarmonicStructure, label: usize) -> Result<FixedPointData> {
    let q = hs.q();
    let letter = hs.spec().fixed_letters[label];
    let r = hs.weights()[letter];
    let a = hs.extension_matrix(letter);
    let others: Vec<usize> = (0..q).filter(|&c| c != label).collect();
    let b = a.select_rows(&others).select_columns(&others);

    let shift = r * (1.0 + 1e-9) + 1e-14;
    let shifted = &b - DMatrix::identity(q - 1, q - 1) * shift;
    let lu = shifted.lu();
    let mut x = DVector::from_element(q - 1, 1.0);
    for _ in 0..INVERSE_ITERATIONS {
        let y = lu.solve(&x).ok_or_else(|| {
            Error::BrokenStructure(format!("inverse iteration singular for letter {letter}"))
        })?;
        let n = y.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::BrokenStructure(format!(
                "inverse iteration diverged for letter {letter}"
            )));
        }
        x = y / n;
    }
    let lambda = x.dot(&(&b * &x)) / x.dot(&x);
    if (lambda - r).abs() > EIGENVALUE_TOL {
        return Err(Error::BrokenStructure(format!(
            "A_{letter} has no eigenvalue r = {r} with v(p) = 0 (nearest {lambda})"
        )));
    }

    let mut v = vec![0.0; q];
    for (&c, &val) in others.iter().zip(x.iter()) {
        v[c] = val;
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if v.iter().any(|&x| x < -1e-10 * vmax) {
        return Err(Error::BrokenStructure(format!(
            "eigenvector of A_{letter} has mixed signs: {v:?}"
        )));
    }
    for x in v.iter_mut() {
        *x = x.max(0.0);
    }
    let u: Vec<f64> = (0..q).map(|c| hs.d().matrix()[(c, label)]).collect();
    let s = linalg::dot(&u, &v);
    if !(s > 1e-14) {
        return Err(Error::BrokenStructure(format!(
            "(u_{letter}, v_{letter}) = {s} cannot be normalized"
        )));
    }
    v.iter_mut().for_each(|x| *x /= s);

    let av = hs.apply(letter, &v);
    let eigen_residual = av.iter().zip(&v).fold(0.0f64, |m, (x, y)| m.max((x - r * y).abs()));
    let atu = a.transpose() * DVector::from_column_slice(&u);
    let adjoint_residual = atu
        .iter()
        .zip(&u)
        .fold(0.0f64, |m, (x, y)| m.max((x - r * y).abs()));
    Ok(FixedPointData {
        label,
        letter,
        v,
        u,
        eigen_residual,
        adjoint_residual,
    })
}

/// `|r_i^{-n} P A_i^n α − (u_i, α) P v_i|` for `n = 0..=n_max`, with `i`
/// the letter fixing `p_label`.
///
/// Since `A_i v_i = r_i v_i` and `A_i` fixes constants, this equals
/// `|r_i^{-n} P A_i^n β|` with `β = α − (u_i, α) v_i`; iterating on `β`
/// keeps the rounding error relative to the decaying quantity itself.
pub fn convergence_errors(
    hs: &HarmonicStructure,
    label: usize,
    alpha: &[f64],
    n_max: usize,
) -> Vec<f64> {
    let fp = hs.fixed_point(label);
    let r = hs.weights()[fp.letter];
    let coeff = linalg::dot(&fp.u, alpha);
    let beta: Vec<f64> = alpha.iter().zip(&fp.v).map(|(a, v)| a - coeff * v).collect();
    let mut y = linalg::project_mean_zero(&beta);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        out.push(linalg::norm(&y));
        if n < n_max {
            y = linalg::project_mean_zero(&hs.apply(fp.letter, &y))
                .into_iter()
                .map(|x| x / r)
                .collect();
        }
    }
    out
}
