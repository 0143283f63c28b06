//! Discrete energy forms on vertex sets and their traces (Schur complements).

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix};

use super::HarmonicStructure;
use crate::error::{Error, Result};
use crate::structure::{LevelGraph, Template};

/// A symmetric quadratic form on `l(V)` stored by its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteForm {
    size: usize,
    entries: BTreeMap<(u32, u32), f64>,
}

impl DiscreteForm {
    pub fn new(size: usize) -> Self {
        DiscreteForm {
            size,
            entries: BTreeMap::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i as u32, j as u32)).copied().unwrap_or(0.0)
    }

    /// Adds `weight * block` on the vertices `ids` (block is row-major).
    pub fn add_block(&mut self, ids: &[u32], block: &[f64], weight: f64) {
        let q = ids.len();
        for (a, &ia) in ids.iter().enumerate() {
            for (b, &ib) in ids.iter().enumerate() {
                let v = weight * block[a * q + b];
                if v != 0.0 {
                    *self.entries.entry((ia, ib)).or_insert(0.0) += v;
                }
            }
        }
    }

    /// `Q(u, u)`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|(&(i, j), &v)| u[i as usize] * v * u[j as usize])
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (&(i, j), &v) in &self.entries {
            m[(i as usize, j as usize)] = v;
        }
        m
    }
}

/// `E^(n)` on `l(V_n)`: `Σ_w r_w^{-1} (−D u_w, u_w)` over the level-`n` cells.
pub fn assemble_discrete_form(hs: &HarmonicStructure, graph: &LevelGraph) -> DiscreteForm {
    let neg_d: Vec<f64> = hs.neg_d_row_major();
    let weights = hs.cell_weights(graph.level());
    let mut form = DiscreteForm::new(graph.vertex_count());
    for (idx, rw) in weights.iter().enumerate() {
        form.add_block(graph.cell(idx), &neg_d, 1.0 / rw);
    }
    form
}

/// `Σ_i weight_i^{-1} (−D)` on the level-one template classes.
pub fn level_one_form(template: &Template, d: &DMatrix<f64>, r: &[f64]) -> DMatrix<f64> {
    let q = template.q;
    let mut m = DMatrix::zeros(template.class_count, template.class_count);
    for (i, ri) in r.iter().enumerate() {
        let cell = template.cell(i);
        for a in 0..q {
            for b in 0..q {
                m[(cell[a], cell[b])] -= d[(a, b)] / ri;
            }
        }
    }
    m
}

/// The trace of a form onto `keep`, together with the minimizing extension.
#[derive(Debug, Clone)]
pub struct TracedForm {
    pub keep: Vec<usize>,
    pub eliminated: Vec<usize>,
    /// Traced form on `keep` (in the order of `keep`).
    pub matrix: DMatrix<f64>,
    /// Values on `eliminated` of the minimizer are `extension * v`.
    pub extension: DMatrix<f64>,
}

impl TracedForm {
    pub fn eval(&self, v: &[f64]) -> f64 {
        let x = nalgebra::DVector::from_column_slice(v);
        (x.transpose() * &self.matrix * &x)[(0, 0)]
    }

    /// Full minimizing vector, indexed like the original form.
    pub fn minimizer(&self, v: &[f64]) -> Vec<f64> {
        let n = self.keep.len() + self.eliminated.len();
        let mut out = vec![0.0; n];
        for (&k, &x) in self.keep.iter().zip(v) {
            out[k] = x;
        }
        let x = nalgebra::DVector::from_column_slice(v);
        let e = &self.extension * x;
        for (&idx, &val) in self.eliminated.iter().zip(e.iter()) {
            out[idx] = val;
        }
        out
    }
}

/// Schur complement `Q_KK − Q_KE Q_EE^{-1} Q_EK`; realizes
/// `min { Q(u) : u|keep = v }`.
pub fn trace_form(q: &DMatrix<f64>, keep: &[usize]) -> Result<TracedForm> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::InvalidArgument("form matrix is not square".into()));
    }
    let mut in_keep = vec![false; n];
    for &k in keep {
        if k >= n || in_keep[k] {
            return Err(Error::InvalidArgument(format!("bad keep index {k}")));
        }
        in_keep[k] = true;
    }
    let eliminated: Vec<usize> = (0..n).filter(|&i| !in_keep[i]).collect();
    let qkk = q.select_rows(keep).select_columns(keep);
    if eliminated.is_empty() {
        return Ok(TracedForm {
            keep: keep.to_vec(),
            eliminated,
            matrix: qkk,
            extension: DMatrix::zeros(0, keep.len()),
        });
    }
    let qee = q.select_rows(&eliminated).select_columns(&eliminated);
    let qek = q.select_rows(&eliminated).select_columns(keep);
    let chol = Cholesky::new(qee).ok_or_else(|| {
        Error::DegenerateForm(format!(
            "eliminated block on {} vertices is singular",
            eliminated.len()
        ))
    })?;
    let x = chol.solve(&qek);
    let matrix = &qkk - qek.transpose() * &x;
    // symmetrize away rounding
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    Ok(TracedForm {
        keep: keep.to_vec(),
        eliminated,
        matrix,
        extension: -x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{generate_spec, FractalKind};

    fn gasket_d() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, -2.0])
    }

    #[test]
    fn keep_everything_is_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let t = trace_form(&m, &[0, 1]).unwrap();
        assert_eq!(t.matrix, m);
    }

    #[test]
    fn sg2_trace_reproduces_e0() {
        let spec = generate_spec(FractalKind::Gasket, 2).unwrap();
        let t = spec.validate().unwrap();
        let e1 = level_one_form(&t, &gasket_d(), &[0.6; 3]);
        let tr = trace_form(&e1, &[0, 1, 2]).unwrap();
        let diff = &tr.matrix + gasket_d();
        assert!(crate::linalg::max_abs(&diff) < 1e-12);
    }

    #[test]
    fn traced_value_matches_full_form_at_minimizer() {
        let spec = generate_spec(FractalKind::Gasket, 2).unwrap();
        let t = spec.validate().unwrap();
        let e1 = level_one_form(&t, &gasket_d(), &[0.6; 3]);
        let tr = trace_form(&e1, &[0, 1, 2]).unwrap();
        let v = [0.3, -1.2, 2.0];
        let u = tr.minimizer(&v);
        let full = nalgebra::DVector::from_vec(u.clone());
        let direct = (full.transpose() * &e1 * &full)[(0, 0)];
        assert!((direct - tr.eval(&v)).abs() < 1e-12);
        // perturbing the interior only increases the energy
        let mut w = u.clone();
        w[4] += 1e-3;
        let w = nalgebra::DVector::from_vec(w);
        assert!((w.transpose() * &e1 * &w)[(0, 0)] > direct);
    }

    #[test]
    fn singular_block_is_reported() {
        // vertex 2 is isolated from the kept vertex
        let m = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(trace_form(&m, &[0]), Err(Error::DegenerateForm(_))));
    }
}
