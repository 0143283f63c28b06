use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use super::form::{level_one_form, trace_form};
use super::{DirichletMatrix, HarmonicStructure};
use crate::error::{Error, Result};
use crate::linalg;
use crate::structure::{FractalSpec, LevelGraph};

pub const REGULARITY_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-12;
const PROPORTIONALITY_TOL: f64 = 1e-9;
const DET_TOL: f64 = 1e-12;
/// Level at which connectivity of `K \ {p}` is tested.
const B2_LEVEL: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub witness: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConditionReport {
    pub conditions: Vec<Condition>,
}

impl ConditionReport {
    fn push(&mut self, name: &str, passed: bool, residual: f64, witness: impl Into<String>) {
        self.conditions.push(Condition {
            name: name.to_string(),
            passed,
            residual,
            witness: witness.into(),
        });
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> String {
        self.conditions
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({})", c.name, c.witness))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn extend(&mut self, other: ConditionReport) {
        self.conditions.extend(other.conditions);
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(
                f,
                "{:<10} {}  residual={:.17e}  {}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.residual,
                c.witness
            )?;
        }
        Ok(())
    }
}

/// (D1) nonpositive definite, (D2) kernel = constants, (D3) off-diagonals
/// nonnegative.
pub fn check_dirichlet_matrix(d: &DirichletMatrix) -> Result<ConditionReport> {
    let m = d.matrix();
    let n = m.nrows();
    let asym = linalg::max_abs(&(m - m.transpose()));
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidArgument(format!(
            "D is not symmetric (max |D - D^T| = {asym:e})"
        )));
    }
    let mut report = ConditionReport::default();
    let ev = linalg::symmetric_eigenvalues(m);
    let top = *ev.last().unwrap();
    report.push(
        "D1",
        top <= EIGEN_TOL,
        top.max(0.0),
        format!("largest eigenvalue {top:.6e}"),
    );

    let scale = linalg::max_abs(m).max(1.0);
    let kernel_dim = ev.iter().filter(|x| x.abs() <= 1e-10 * scale).count();
    let row_sum = (0..n)
        .map(|i| m.row(i).sum().abs())
        .fold(0.0, f64::max);
    report.push(
        "D2",
        kernel_dim == 1 && row_sum <= EIGEN_TOL * scale,
        row_sum,
        format!("kernel dimension {kernel_dim}, max |row sum| {row_sum:.3e}"),
    );

    let mut worst = None;
    for i in 0..n {
        for j in i + 1..n {
            if m[(i, j)] < 0.0 && worst.is_none() {
                worst = Some((i, j, m[(i, j)]));
            }
        }
    }
    let min_off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .fold(f64::INFINITY, f64::min);
    match worst {
        Some((i, j, v)) => report.push("D3", false, -v, format!("entry ({i},{j}) = {v}")),
        None => report.push("D3", true, 0.0, format!("min off-diagonal {min_off}")),
    }
    Ok(report)
}

/// `‖trace(E^(1)) − E^(0)‖_max`.
pub fn check_regularity(spec: &FractalSpec, d: &DirichletMatrix, r: &[f64]) -> Result<f64> {
    let template = spec.validate()?;
    if r.len() != spec.letters {
        return Err(Error::InvalidArgument(format!(
            "r has {} entries, spec has k = {}",
            r.len(),
            spec.letters
        )));
    }
    if let Some((i, ri)) = r.iter().enumerate().find(|(_, &ri)| !(ri > 0.0 && ri < 1.0)) {
        return Err(Error::InvalidArgument(format!("r[{i}] = {ri} is not in (0,1)")));
    }
    let e1 = level_one_form(&template, d.matrix(), r);
    let keep: Vec<usize> = (0..spec.boundary).collect();
    let traced = trace_form(&e1, &keep)?;
    Ok(linalg::max_abs(&(traced.matrix + d.matrix())))
}

/// Traces the unweighted level-one form onto `V_0`; if it equals `c E^(0)`
/// the common weight is `r = c`.
pub fn solve_equal_renormalization(spec: &FractalSpec, d: &DirichletMatrix) -> Result<f64> {
    let template = spec.validate()?;
    let e1 = level_one_form(&template, d.matrix(), &vec![1.0; spec.letters]);
    let keep: Vec<usize> = (0..spec.boundary).collect();
    let s = trace_form(&e1, &keep)?.matrix;
    let e0: DMatrix<f64> = -d.matrix();
    let c = s.dot(&e0) / e0.dot(&e0);
    let deviation = linalg::max_abs(&(&s - &e0 * c)) / linalg::max_abs(&e0);
    if deviation > PROPORTIONALITY_TOL {
        return Err(Error::NoEqualWeightStructure {
            ratio: c,
            deviation,
        });
    }
    Ok(c)
}

/// (B1) `q = 3`; (B2) `K \ {p}` connected, tested on the level-3 graph;
/// (B3) every boundary point is a fixed point and `Dv_i < 0` off `p_i`;
/// (B4) `A_i` invertible.
pub fn check_b_conditions(hs: &HarmonicStructure) -> Result<ConditionReport> {
    let spec = hs.spec();
    let q = spec.boundary;
    let mut report = ConditionReport::default();
    report.push("B1", q == 3, q as f64, format!("#V_0 = {q}"));

    let graph = LevelGraph::build(spec, B2_LEVEL)?;
    let cut: Vec<usize> = (0..q as u32)
        .filter(|&b| !graph.is_connected_without(Some(b)))
        .map(|b| b as usize)
        .collect();
    report.push(
        "B2",
        cut.is_empty(),
        cut.len() as f64,
        if cut.is_empty() {
            format!("level-{B2_LEVEL} graph stays connected without each boundary vertex")
        } else {
            format!("removing boundary vertex {} disconnects level {B2_LEVEL}", cut[0])
        },
    );

    let s0 = spec.fixed_letters.len();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = String::new();
    for (b, fp) in hs.fixed_points().iter().enumerate() {
        let dv = hs.d().matrix() * nalgebra::DVector::from_column_slice(&fp.v);
        for c in (0..q).filter(|&c| c != b) {
            if dv[c] > worst {
                worst = dv[c];
                witness = format!("Dv_{b}({c}) = {:.6e}", dv[c]);
            }
        }
    }
    report.push("B3", s0 == 3 && worst < 0.0, worst, format!("#S_0 = {s0}, max {witness}"));

    let mut min_det = f64::INFINITY;
    let mut det_witness = String::new();
    for fp in hs.fixed_points() {
        let det = hs.extension_matrix(fp.letter).determinant();
        if det.abs() < min_det {
            min_det = det.abs();
            det_witness = format!("det A_{} = {det:.6e}", fp.letter);
        }
    }
    report.push("B4", min_det > DET_TOL, min_det, det_witness);
    Ok(report)
}
