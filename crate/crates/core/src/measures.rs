//! Energy measures of harmonic and piecewise-harmonic functions on cells.
//!
//! Measures are only ever represented by their values on cells `K_w`; since
//! energy measures carry no atoms, these values are additive over children.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::harmonic::{BoundaryVector, HarmonicStructure};
use crate::io::fmt_f64;
use crate::linalg;
use crate::structure::{LevelGraph, Word};

/// Relative tolerance of the domination check, scaled by `μ_⟨h⟩(K)`.
pub const DOMINATION_TOL: f64 = 1e-9;

/// `h = (h_1, …, h_N)` with every `h_j` harmonic, stored by boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTuple {
    components: Vec<BoundaryVector>,
}

impl HarmonicTuple {
    pub fn new(components: Vec<BoundaryVector>, q: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("harmonic tuple needs N >= 1".into()));
        }
        if let Some(j) = components.iter().position(|c| c.0.len() != q) {
            return Err(Error::InvalidArgument(format!(
                "tuple component {j} has {} values, expected {q}",
                components[j].0.len()
            )));
        }
        if components.iter().flat_map(|c| &c.0).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("tuple values must be finite".into()));
        }
        Ok(HarmonicTuple { components })
    }

    /// The `q − 1` mean-zero boundary vectors, orthonormal for `E^(0)`,
    /// obtained by Gram-Schmidt on `P e_0, P e_1, …`.
    pub fn standard(hs: &HarmonicStructure) -> Self {
        let q = hs.q();
        let d = hs.d();
        let inner = |a: &[f64], b: &[f64]| {
            let x = nalgebra::DVector::from_column_slice(a);
            let y = nalgebra::DVector::from_column_slice(b);
            -(x.transpose() * d.matrix() * y)[(0, 0)]
        };
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for b in 0..q {
            let mut e = vec![0.0; q];
            e[b] = 1.0;
            let mut v = linalg::project_mean_zero(&e);
            for u in &basis {
                let c = inner(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
            let n = inner(&v, &v);
            if n > 1e-12 {
                let s = n.sqrt();
                basis.push(v.into_iter().map(|x| x / s).collect());
            }
            if basis.len() == q - 1 {
                break;
            }
        }
        HarmonicTuple {
            components: basis.into_iter().map(BoundaryVector).collect(),
        }
    }

    pub fn components(&self) -> &[BoundaryVector] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// All components constant: every energy measure vanishes.
    pub fn is_all_constant(&self) -> bool {
        self.components.iter().all(|c| {
            let v = c.values();
            v.iter().all(|x| (x - v[0]).abs() <= 1e-14 * (1.0 + v[0].abs()))
        })
    }

    pub fn scaled(&self, c: f64) -> HarmonicTuple {
        HarmonicTuple {
            components: self
                .components
                .iter()
                .map(|b| BoundaryVector(b.0.iter().map(|x| c * x).collect()))
                .collect(),
        }
    }
}

/// Values of a cell measure on every word up to `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeasureTable {
    k: usize,
    /// `values[m][idx]` for the level-`m` word with index `idx`.
    values: Vec<Vec<f64>>,
}

impl CellMeasureTable {
    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, w: &Word) -> f64 {
        self.values[w.len()][w.index(self.k)]
    }

    pub fn level(&self, m: usize) -> &[f64] {
        &self.values[m]
    }

    pub fn total(&self) -> f64 {
        self.values[0][0]
    }

    /// `word,depth,value` rows in word order, depth by depth.
    pub fn to_csv(&self) -> String {
        table_csv(self.k, &self.values, "value")
    }
}

fn table_csv(k: usize, values: &[Vec<f64>], column: &str) -> String {
    let mut out = format!("word,depth,{column}\n");
    for (m, level) in values.iter().enumerate() {
        for (idx, v) in level.iter().enumerate() {
            let w = Word::from_index(idx, m, k);
            let _ = writeln!(out, "{},{},{}", w.to_text(k), m, fmt_f64(*v));
        }
    }
    out
}

/// `μ_⟨h⟩(K_w) = Σ_j (2/r_w)(−D A_w α_j, A_w α_j)`.
pub fn harmonic_cell_measure(hs: &HarmonicStructure, h: &HarmonicTuple, w: &Word) -> f64 {
    let rw = hs.word_weight(w.letters());
    h.components()
        .iter()
        .map(|a| {
            let beta = hs.apply_word(w.letters(), a.values());
            2.0 / rw * linalg::quad_form(hs.neg_d(), hs.q(), &beta)
        })
        .sum()
}

/// Boundary values `A_w α_j` of every component on every level-`n` cell,
/// laid out as `[cell][component][label]`.
pub(crate) fn harmonic_cell_values(hs: &HarmonicStructure, h: &HarmonicTuple, n: usize) -> Vec<f64> {
    let (k, q, big_n) = (hs.k(), hs.q(), h.len());
    let stride = big_n * q;
    let mut cur: Vec<f64> = h.components().iter().flat_map(|c| c.0.clone()).collect();
    for _ in 0..n {
        let mut next = vec![0.0; cur.len() * k];
        for (u, block) in cur.chunks_exact(stride).enumerate() {
            for i in 0..k {
                let dst = &mut next[(u * k + i) * stride..(u * k + i + 1) * stride];
                for j in 0..big_n {
                    hs.apply_into(i, &block[j * q..(j + 1) * q], &mut dst[j * q..(j + 1) * q]);
                }
            }
        }
        cur = next;
    }
    cur
}

/// `μ_⟨h⟩` on every word up to `depth`, evaluated directly per word.
pub fn harmonic_measure_table(
    hs: &HarmonicStructure,
    h: &HarmonicTuple,
    depth: usize,
) -> CellMeasureTable {
    let q = hs.q();
    let stride = h.len() * q;
    let values = (0..=depth)
        .map(|m| {
            let cells = harmonic_cell_values(hs, h, m);
            let weights = hs.cell_weights(m);
            cells
                .chunks_exact(stride)
                .zip(&weights)
                .map(|(block, rw)| {
                    block
                        .chunks_exact(q)
                        .map(|beta| 2.0 / rw * linalg::quad_form(hs.neg_d(), q, beta))
                        .sum()
                })
                .collect()
        })
        .collect();
    CellMeasureTable { k: hs.k(), values }
}

/// `b_pq = 2 D_pq / r_w` for `p != q` (zero diagonal).
pub fn trace_coefficients(hs: &HarmonicStructure, w: &Word) -> DMatrix<f64> {
    let rw = hs.word_weight(w.letters());
    let d = hs.d().matrix();
    DMatrix::from_fn(hs.q(), hs.q(), |p, r| if p == r { 0.0 } else { 2.0 * d[(p, r)] / rw })
}

/// `μ_⟨H_n f⟩(K_w)` for every level-`n` cell: `(2/r_w)(−D f_w, f_w)`.
pub fn piecewise_level_values(hs: &HarmonicStructure, graph: &LevelGraph, f: &[f64]) -> Vec<f64> {
    let q = hs.q();
    let weights = hs.cell_weights(graph.level());
    let mut fw = vec![0.0; q];
    weights
        .iter()
        .enumerate()
        .map(|(idx, rw)| {
            for (slot, &v) in fw.iter_mut().zip(graph.cell(idx)) {
                *slot = f[v as usize];
            }
            2.0 / rw * linalg::quad_form(hs.neg_d(), q, &fw)
        })
        .collect()
}

/// Sums level values up to every coarser depth `0..=depth`.
fn aggregate(k: usize, n: usize, level_values: Vec<f64>, depth: usize) -> Vec<Vec<f64>> {
    let mut levels = vec![level_values];
    for _ in (depth..n).rev() {
        let finer = levels.last().unwrap();
        let coarser = finer.chunks_exact(k).map(|c| c.iter().sum()).collect();
        levels.push(coarser);
    }
    // levels now holds n, n-1, ..., depth; continue up to 0
    let mut top = levels.pop().unwrap();
    let mut out = vec![top.clone()];
    for _ in 0..depth {
        top = top.chunks_exact(k).map(|c| c.iter().sum()).collect();
        out.push(top.clone());
    }
    out.reverse();
    out
}

fn check_f(graph: &LevelGraph, f: &[f64]) -> Result<()> {
    if f.len() != graph.vertex_count() {
        return Err(Error::InvalidArgument(format!(
            "f has {} values, V_{} has {} vertices",
            f.len(),
            graph.level(),
            graph.vertex_count()
        )));
    }
    Ok(())
}

/// `μ_⟨H_n f⟩` on every word up to `depth <= n`.
pub fn piecewise_measure_table(
    hs: &HarmonicStructure,
    graph: &LevelGraph,
    f: &[f64],
    depth: usize,
) -> Result<CellMeasureTable> {
    check_f(graph, f)?;
    let n = graph.level();
    if depth > n {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds level {n}")));
    }
    let level = piecewise_level_values(hs, graph, f);
    Ok(CellMeasureTable {
        k: hs.k(),
        values: aggregate(hs.k(), n, level, depth),
    })
}

/// `μ_⟨H_n f⟩(K_w)` for `|w| <= n`.
pub fn piecewise_cell_measure(
    hs: &HarmonicStructure,
    graph: &LevelGraph,
    f: &[f64],
    w: &Word,
) -> Result<f64> {
    check_f(graph, f)?;
    let n = graph.level();
    let m = w.len();
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "word of length {m} is deeper than level {n}"
        )));
    }
    let q = hs.q();
    let k = hs.k();
    let span = k.pow((n - m) as u32);
    let start = w.index(k) * span;
    let base = hs.word_weight(w.letters());
    let sub = hs.cell_weights(n - m);
    let mut fw = vec![0.0; q];
    let mut total = 0.0;
    for (s, rs) in sub.iter().enumerate() {
        for (slot, &v) in fw.iter_mut().zip(graph.cell(start + s)) {
            *slot = f[v as usize];
        }
        total += 2.0 / (base * rs) * linalg::quad_form(hs.neg_d(), q, &fw);
    }
    Ok(total)
}

/// `μ_⟨h⟩(K_w) − μ_⟨H_n f⟩(K_w)` on every word up to `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackTable {
    k: usize,
    slack: Vec<Vec<f64>>,
    pub min_slack: f64,
    pub argmin: Word,
    /// `μ_⟨h⟩(K)`.
    pub scale: f64,
    pub tolerance: f64,
    pub feasible: bool,
}

impl SlackTable {
    fn from_levels(k: usize, slack: Vec<Vec<f64>>, scale: f64) -> Self {
        let mut min_slack = f64::INFINITY;
        let mut argmin = Word::empty();
        for (m, level) in slack.iter().enumerate() {
            for (idx, &s) in level.iter().enumerate() {
                if s < min_slack {
                    min_slack = s;
                    argmin = Word::from_index(idx, m, k);
                }
            }
        }
        let tolerance = DOMINATION_TOL * scale;
        SlackTable {
            k,
            slack,
            min_slack,
            argmin,
            scale,
            tolerance,
            feasible: min_slack >= -tolerance,
        }
    }

    pub fn depth(&self) -> usize {
        self.slack.len() - 1
    }

    pub fn get(&self, w: &Word) -> f64 {
        self.slack[w.len()][w.index(self.k)]
    }

    pub fn level(&self, m: usize) -> &[f64] {
        &self.slack[m]
    }

    pub fn to_csv(&self) -> String {
        table_csv(self.k, &self.slack, "slack")
    }
}

/// Cell-wise domination of `μ_⟨H_n f⟩` by `μ_⟨h⟩` on all words of length
/// `<= m_max`.
pub fn check_domination(
    hs: &HarmonicStructure,
    graph: &LevelGraph,
    f: &[f64],
    h: &HarmonicTuple,
    m_max: usize,
) -> Result<SlackTable> {
    let fmeas = piecewise_measure_table(hs, graph, f, m_max)?;
    let hmeas = harmonic_measure_table(hs, h, m_max);
    let slack = hmeas
        .values
        .iter()
        .zip(&fmeas.values)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    Ok(SlackTable::from_levels(hs.k(), slack, hmeas.total()))
}

/// Smallest slack over the cells `ws` with `|w| = n` and `1 <= |s| <= extra`,
/// where `H_n f` is harmonic inside each level-`n` cell.
pub fn deep_min_slack(
    hs: &HarmonicStructure,
    graph: &LevelGraph,
    f: &[f64],
    h: &HarmonicTuple,
    extra: usize,
) -> Result<f64> {
    check_f(graph, f)?;
    let (q, k, n) = (hs.q(), hs.k(), graph.level());
    let stride = h.len() * q;
    let hvals = harmonic_cell_values(hs, h, n);
    let weights = hs.cell_weights(n);
    let mut min_slack = f64::INFINITY;
    for (idx, rw) in weights.iter().enumerate() {
        let fw: Vec<f64> = graph.cell(idx).iter().map(|&v| f[v as usize]).collect();
        // breadth-first over sub-words, carrying boundary values and weight
        let mut frontier = vec![(fw, hvals[idx * stride..(idx + 1) * stride].to_vec(), *rw)];
        for _ in 0..extra {
            let mut next = Vec::with_capacity(frontier.len() * k);
            for (fb, hb, r) in &frontier {
                for i in 0..k {
                    let r2 = r * hs.weights()[i];
                    let f2 = hs.apply(i, fb);
                    let h2: Vec<f64> = hb.chunks_exact(q).flat_map(|c| hs.apply(i, c)).collect();
                    let mf = 2.0 / r2 * linalg::quad_form(hs.neg_d(), q, &f2);
                    let mh: f64 = h2
                        .chunks_exact(q)
                        .map(|c| 2.0 / r2 * linalg::quad_form(hs.neg_d(), q, c))
                        .sum();
                    min_slack = min_slack.min(mh - mf);
                    next.push((f2, h2, r2));
                }
            }
            frontier = next;
        }
    }
    Ok(min_slack)
}
