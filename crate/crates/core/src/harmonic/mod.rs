//! Harmonic structures `(D, r)`: discrete energies, harmonic extension
//! matrices `A_i`, fixed-point eigendata and the structural conditions.

mod conditions;
mod eigen;
mod form;
mod separation;

pub use conditions::{
    check_b_conditions, check_dirichlet_matrix, check_regularity, solve_equal_renormalization,
    Condition, ConditionReport, REGULARITY_TOL,
};
pub use eigen::{convergence_errors, FixedPointData};
pub use form::{assemble_discrete_form, level_one_form, trace_form, DiscreteForm, TracedForm};
pub use separation::{separation_constant, separation_constant_of};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::structure::{FractalSpec, Template, VertexRef};

/// The boundary matrix `D` of a harmonic structure; `E^(0)(u,v) = (−Du, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletMatrix(DMatrix<f64>);

impl DirichletMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "D must be square of size >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(DirichletMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("D rows have unequal lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        DirichletMatrix::new(DMatrix::from_row_slice(n, n, &flat))
    }

    /// Off-diagonal entries 1, diagonal `−(q − 1)`: the complete-graph
    /// Laplacian used by the builtin symmetric fractals.
    pub fn complete_graph(q: usize) -> Self {
        DirichletMatrix(DMatrix::from_fn(q, q, |i, j| {
            if i == j {
                -((q - 1) as f64)
            } else {
                1.0
            }
        }))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// `E^(0)(u, u)`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let x = nalgebra::DVector::from_column_slice(u);
        -(x.transpose() * &self.0 * &x)[(0, 0)]
    }
}

/// Boundary values `α` of a harmonic function (`α = ι^{-1}(h)`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVector(pub Vec<f64>);

impl BoundaryVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// A regular harmonic structure together with its derived data.
#[derive(Debug, Clone)]
pub struct HarmonicStructure {
    spec: FractalSpec,
    template: Template,
    d: DirichletMatrix,
    r: Vec<f64>,
    /// `A_i`, row-major `q x q`.
    ext: Vec<Vec<f64>>,
    neg_d: Vec<f64>,
    eigen: Vec<FixedPointData>,
    regularity_residual: f64,
}

impl HarmonicStructure {
    /// Builds the structure; when `r` is `None` the equal-weight
    /// renormalization factor is solved for.
    pub fn new(spec: &FractalSpec, d: DirichletMatrix, r: Option<Vec<f64>>) -> Result<Self> {
        let template = spec.validate()?;
        let q = spec.boundary;
        if d.size() != q {
            return Err(Error::InvalidArgument(format!(
                "D is {}x{}, spec has q = {q}",
                d.size(),
                d.size()
            )));
        }
        let report = check_dirichlet_matrix(&d)?;
        if !report.all_passed() {
            return Err(Error::BrokenStructure(format!("D fails: {}", report.failures())));
        }
        let r = match r {
            Some(r) => r,
            None => {
                let c = solve_equal_renormalization(spec, &d)?;
                vec![c; spec.letters]
            }
        };
        let regularity_residual = check_regularity(spec, &d, &r)?;
        if regularity_residual > REGULARITY_TOL {
            return Err(Error::NotRegular {
                residual: regularity_residual,
            });
        }

        let e1 = level_one_form(&template, d.matrix(), &r);
        let boundary: Vec<usize> = (0..q).collect();
        let traced = trace_form(&e1, &boundary)?;
        // rows of the full harmonic extension V_1 <- V_0
        let mut full = DMatrix::zeros(template.class_count, q);
        for b in 0..q {
            full[(b, b)] = 1.0;
        }
        for (row, &class) in traced.eliminated.iter().enumerate() {
            for c in 0..q {
                full[(class, c)] = traced.extension[(row, c)];
            }
        }
        let ext = (0..spec.letters)
            .map(|i| {
                let cell = template.cell(i);
                let mut a = Vec::with_capacity(q * q);
                for &class in cell {
                    for c in 0..q {
                        a.push(full[(class, c)]);
                    }
                }
                a
            })
            .collect();

        let mut hs = HarmonicStructure {
            spec: spec.clone(),
            template,
            neg_d: linalg::to_row_major(&(-d.matrix())),
            d,
            r,
            ext,
            eigen: Vec::new(),
            regularity_residual,
        };
        hs.eigen = (0..q)
            .map(|b| eigen::fixed_point_eigendata(&hs, b))
            .collect::<Result<_>>()?;
        Ok(hs)
    }

    /// The builtin choice: complete-graph `D` and solved equal weights.
    pub fn standard(spec: &FractalSpec) -> Result<Self> {
        HarmonicStructure::new(spec, DirichletMatrix::complete_graph(spec.boundary), None)
    }

    pub fn spec(&self) -> &FractalSpec {
        &self.spec
    }

    pub fn template(&self) -> &Template {
        &self.template
    }

    pub fn d(&self) -> &DirichletMatrix {
        &self.d
    }

    pub fn q(&self) -> usize {
        self.spec.boundary
    }

    pub fn k(&self) -> usize {
        self.spec.letters
    }

    pub fn weights(&self) -> &[f64] {
        &self.r
    }

    pub fn regularity_residual(&self) -> f64 {
        self.regularity_residual
    }

    pub(crate) fn neg_d_row_major(&self) -> Vec<f64> {
        self.neg_d.clone()
    }

    pub(crate) fn neg_d(&self) -> &[f64] {
        &self.neg_d
    }

    /// `A_i` as a row-major slice.
    pub fn extension(&self, letter: usize) -> &[f64] {
        &self.ext[letter]
    }

    pub fn extension_matrix(&self, letter: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.q(), self.q(), &self.ext[letter])
    }

    /// `A_i α`.
    pub fn apply(&self, letter: usize, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.q()];
        linalg::matvec_into(&self.ext[letter], self.q(), alpha, &mut out);
        out
    }

    #[inline]
    pub(crate) fn apply_into(&self, letter: usize, alpha: &[f64], out: &mut [f64]) {
        linalg::matvec_into(&self.ext[letter], self.q(), alpha, out);
    }

    /// `A_w α = A_{w_m} ⋯ A_{w_1} α`, the boundary values of `h ∘ ψ_w`.
    pub fn apply_word(&self, letters: impl IntoIterator<Item = usize>, alpha: &[f64]) -> Vec<f64> {
        let mut cur = alpha.to_vec();
        let mut next = vec![0.0; self.q()];
        for l in letters {
            self.apply_into(l, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Eigendata of the letter fixing boundary point `label`.
    pub fn fixed_point(&self, label: usize) -> &FixedPointData {
        &self.eigen[label]
    }

    pub fn fixed_points(&self) -> &[FixedPointData] {
        &self.eigen
    }

    /// `r_w` for every level-`n` cell in word-index order.
    pub fn cell_weights(&self, n: usize) -> Vec<f64> {
        let mut w = vec![1.0];
        for _ in 0..n {
            w = w
                .iter()
                .flat_map(|rw| self.r.iter().map(move |ri| rw * ri))
                .collect();
        }
        w
    }

    pub fn word_weight(&self, letters: impl IntoIterator<Item = usize>) -> f64 {
        letters.into_iter().map(|l| self.r[l]).product()
    }
}

/// Value of the harmonic function with boundary values `α` at `ψ_w(p_label)`.
pub fn harmonic_eval(hs: &HarmonicStructure, alpha: &BoundaryVector, r: &VertexRef) -> f64 {
    hs.apply_word(r.word.letters(), alpha.values())[r.label]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{generate_spec, FractalKind, Word};

    fn sg2() -> HarmonicStructure {
        HarmonicStructure::standard(&generate_spec(FractalKind::Gasket, 2).unwrap()).unwrap()
    }

    #[test]
    fn sg2_extension_matrix() {
        let hs = sg2();
        let expected = [1.0, 0.0, 0.0, 0.4, 0.4, 0.2, 0.4, 0.2, 0.4];
        assert!(linalg::max_abs_diff(hs.extension(0), &expected) < 1e-12);
        for i in 0..3 {
            let ones = hs.apply(i, &[1.0; 3]);
            assert!(linalg::max_abs_diff(&ones, &[1.0; 3]) < 1e-12);
            assert!(hs.extension(i).iter().all(|&a| (-1e-15..=1.0 + 1e-15).contains(&a)));
        }
        let v0 = hs.apply(0, &[0.0, 1.0, 1.0]);
        assert!(linalg::max_abs_diff(&v0, &[0.0, 0.6, 0.6]) < 1e-12);
    }

    #[test]
    fn harmonic_eval_examples() {
        let hs = sg2();
        let alpha = BoundaryVector(vec![0.0, 1.0, 1.0]);
        let r = VertexRef::new(Word::from_letters(&[0]), 1);
        assert!((harmonic_eval(&hs, &alpha, &r) - 0.6).abs() < 1e-12);
        for b in 0..3 {
            assert_eq!(harmonic_eval(&hs, &alpha, &VertexRef::boundary(b)), alpha.0[b]);
        }
        let c = BoundaryVector(vec![2.5; 3]);
        let deep = VertexRef::new(Word::from_letters(&[2, 0, 1, 1, 0]), 2);
        assert!((harmonic_eval(&hs, &c, &deep) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn cell_weights_multiply() {
        let hs = sg2();
        let w = hs.cell_weights(2);
        assert_eq!(w.len(), 9);
        assert!(w.iter().all(|&x| (x - 0.36).abs() < 1e-15));
    }

    #[test]
    fn wrong_size_d_rejected() {
        let spec = generate_spec(FractalKind::Gasket, 2).unwrap();
        let d = DirichletMatrix::complete_graph(4);
        assert!(HarmonicStructure::new(&spec, d, None).is_err());
    }

    #[test]
    fn non_regular_weights_rejected() {
        let spec = generate_spec(FractalKind::Gasket, 2).unwrap();
        let d = DirichletMatrix::complete_graph(3);
        let err = HarmonicStructure::new(&spec, d, Some(vec![0.5; 3])).unwrap_err();
        assert!(matches!(err, Error::NotRegular { .. }));
    }
}
