//! Discrete intrinsic distance: maximize `f(y) − f(x)` over `f` on `V_n`,
//! piecewise harmonic at level `n`, subject to `μ_⟨H_n f⟩(K_v) ≤ μ_⟨h⟩(K_v)`
//! for every cell `v` of depth `n + d`.
//!
//! Measures are additive, so the depth-`(n + d)` constraints imply all
//! coarser ones. The problem is solved through its Lagrangian dual
//!
//! ```text
//!     min  √R_λ(x, y)   over λ >= 0 with Σ_v λ_v μ_⟨h⟩(K_v) = 1,
//! ```
//!
//! where `R_λ` is the effective resistance of the network whose cell blocks
//! are `Σ_v λ_v Q_v`. Each iterate gives the dual bound `√R_λ` and the
//! feasible point `s·φ_λ` (the potential, scaled onto the constraint set);
//! the multipliers follow the multiplicative update
//! `λ_v ← λ_v (Q_v(φ)/(μ_⟨h⟩(K_v) R))^{1/2}`.

use nalgebra::DMatrix;

use super::{certificate::default_cap, intrinsic_certificate, MetricContext};
use crate::error::{Error, Result};
use crate::harmonic::HarmonicStructure;
use crate::linalg;
use crate::measures::{check_domination, deep_min_slack, harmonic_measure_table};
use crate::structure::{LevelGraph, VertexRef, Word};

#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicOptions {
    /// Constraint depth beyond `n`.
    pub extra_depth: usize,
    pub max_iter: usize,
    /// Stop once `(upper − value)/upper < rtol`.
    pub rtol: f64,
    /// Cap of the starting certificate; `None` uses the default heuristic.
    pub cap: Option<f64>,
}

impl Default for IntrinsicOptions {
    fn default() -> Self {
        IntrinsicOptions {
            extra_depth: 0,
            max_iter: 2000,
            rtol: 1e-4,
            cap: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntrinsicEstimate {
    pub level: usize,
    pub constraint_depth: usize,
    /// Best feasible value found.
    pub value: f64,
    /// Smallest dual bound seen; the discrete optimum lies in `[value, upper]`.
    pub upper: f64,
    pub certificate_value: f64,
    /// Best value after each iteration, starting with the initial point.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The maximizer, values on `V_n`.
    pub f: Vec<f64>,
    /// Smallest slack of `f` at depths `<= n + d`, recomputed independently.
    pub min_slack: f64,
    pub scale: f64,
}

const LAMBDA_FLOOR: f64 = 1e-10;

/// Bottom-up elimination of cell interiors for a network given by one
/// `q x q` block per level-`n` cell.
struct CellNetwork<'a> {
    graph: &'a LevelGraph,
    top: usize,
}

impl CellNetwork<'_> {
    /// Solves `L φ = e_y − e_x` with `φ(x) = 0`. Returns the potential on
    /// `V_n` and the boundary values of every level-`n` cell.
    fn solve(&self, blocks: Vec<f64>, x: u32, y: u32) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.graph;
        let (k, q, n) = (g.letters(), g.boundary(), g.level());
        let template = g.template();
        let t = template.class_count;
        let ti = t - q;
        let qq = q * q;

        // coefficients of the back-substitution, per level and parent
        let mut back: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut cur = blocks;
        let mut big = vec![0.0; t * t];
        for m in (self.top..n).rev() {
            let parents = cur.len() / (k * qq);
            let mut coarse = vec![0.0; parents * qq];
            let mut coeff = vec![0.0; parents * ti * t];
            for u in 0..parents {
                big.iter_mut().for_each(|x| *x = 0.0);
                for i in 0..k {
                    let blk = &cur[(u * k + i) * qq..(u * k + i + 1) * qq];
                    let cls = template.cell(i);
                    for a in 0..q {
                        for b in 0..q {
                            big[cls[a] * t + cls[b]] += blk[a * q + b];
                        }
                    }
                }
                let cf = &mut coeff[u * ti * t..(u + 1) * ti * t];
                for p in q..t {
                    let piv = big[p * t + p];
                    if !(piv > 0.0) {
                        return Err(Error::DegenerateForm(format!(
                            "zero pivot at level {m}, cell {u}"
                        )));
                    }
                    let row = &mut cf[(p - q) * t..(p - q + 1) * t];
                    for j in 0..t {
                        row[j] = big[p * t + j] / piv;
                    }
                    for i2 in 0..t {
                        let kip = big[i2 * t + p];
                        if i2 == p || kip == 0.0 {
                            continue;
                        }
                        for j in 0..t {
                            big[i2 * t + j] -= kip * row[j];
                        }
                    }
                    for j in 0..t {
                        big[p * t + j] = 0.0;
                        big[j * t + p] = 0.0;
                    }
                }
                for a in 0..q {
                    for b in 0..q {
                        coarse[u * qq + a * q + b] = big[a * t + b];
                    }
                }
            }
            back[m] = coeff;
            cur = coarse;
        }

        // dense grounded solve on V_top
        let size = g.level_size(self.top);
        let mut lap = DMatrix::<f64>::zeros(size, size);
        let top_cells = cur.len() / qq;
        let mut top_ids = Vec::with_capacity(top_cells * q);
        for u in 0..top_cells {
            let ids = g.cell_at(self.top, u);
            for a in 0..q {
                for b in 0..q {
                    lap[(ids[a] as usize, ids[b] as usize)] += cur[u * qq + a * q + b];
                }
            }
            top_ids.extend(ids);
        }
        let keep: Vec<usize> = (0..size).filter(|&i| i != x as usize).collect();
        let reduced = lap.select_rows(&keep).select_columns(&keep);
        let mut rhs = nalgebra::DVector::zeros(size - 1);
        rhs[keep.iter().position(|&i| i == y as usize).unwrap()] = 1.0;
        let sol = reduced
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .or_else(|| reduced.lu().solve(&rhs))
            .ok_or_else(|| Error::DegenerateForm("grounded top-level system is singular".into()))?;
        let mut phi = vec![0.0; g.vertex_count()];
        for (&i, v) in keep.iter().zip(sol.iter()) {
            phi[i] = *v;
        }

        // descend, filling interiors
        let mut vals: Vec<f64> = top_ids.iter().map(|&id| phi[id as usize]).collect();
        let mut cls_vals = vec![0.0; t];
        for m in self.top..n {
            let parents = vals.len() / q;
            let base = g.level_size(m);
            let coeff = &back[m];
            let mut next = vec![0.0; parents * k * q];
            for u in 0..parents {
                cls_vals[..q].copy_from_slice(&vals[u * q..(u + 1) * q]);
                let cf = &coeff[u * ti * t..(u + 1) * ti * t];
                for p in (q..t).rev() {
                    let row = &cf[(p - q) * t..(p - q + 1) * t];
                    let mut s = 0.0;
                    for j in 0..q {
                        s += row[j] * cls_vals[j];
                    }
                    for j in p + 1..t {
                        s += row[j] * cls_vals[j];
                    }
                    cls_vals[p] = -s;
                    phi[base + u * ti + (p - q)] = -s;
                }
                for i in 0..k {
                    for (b, &c) in template.cell(i).iter().enumerate() {
                        next[(u * k + i) * q + b] = cls_vals[c];
                    }
                }
            }
            vals = next;
        }
        Ok((phi, vals))
    }
}

/// `A_s^T (−D) A_s / r_s` for every word `s` of length `d`, row-major.
fn sub_cell_forms(hs: &HarmonicStructure, d: usize) -> Vec<f64> {
    let q = hs.q();
    let weights = hs.cell_weights(d);
    let neg_d = DMatrix::from_row_slice(q, q, hs.neg_d());
    let mut out = Vec::with_capacity(weights.len() * q * q);
    for (idx, rs) in weights.iter().enumerate() {
        let w = Word::from_index(idx, d, hs.k());
        let mut a = DMatrix::<f64>::identity(q, q);
        for l in w.letters() {
            a = hs.extension_matrix(l) * a;
        }
        let m = a.transpose() * &neg_d * &a / *rs;
        out.extend(linalg::to_row_major(&m));
    }
    out
}

pub fn intrinsic_estimate(
    ctx: &MetricContext,
    x: &VertexRef,
    y: &VertexRef,
    n: usize,
    opts: &IntrinsicOptions,
) -> Result<IntrinsicEstimate> {
    let hs = ctx.harmonic();
    let h = ctx.tuple();
    let (k, q) = (hs.k(), hs.q());
    let qq = q * q;
    let d = opts.extra_depth;
    let level = ctx.level(n)?;
    let graph = level.graph();
    let (sx, sy) = (ctx.vertex_id(x, n)?, ctx.vertex_id(y, n)?);
    let cap = opts.cap.unwrap_or_else(|| default_cap(hs, h));
    let cert = intrinsic_certificate(ctx, x, y, n, cap)?;

    let cells = graph.cell_count();
    let subs = k.pow(d as u32);
    let forms = sub_cell_forms(hs, d);
    let hmeas = harmonic_measure_table(hs, h, n + d);
    let c = hmeas.level(n + d);
    let scale = hmeas.total();
    let rw = hs.cell_weights(n);
    if c.iter().any(|&v| !(v > 1e-300)) {
        return Err(Error::Degenerate(
            "μ_⟨h⟩ vanishes on a cell; the constraint pins f there".into(),
        ));
    }

    // g_v(f) for every constraint cell, given cell boundary values
    let constraint_values = |vals: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for w in 0..cells {
            let fw = &vals[w * q..(w + 1) * q];
            for s in 0..subs {
                let v = linalg::quad_form(&forms[s * qq..(s + 1) * qq], q, fw);
                out.push(2.0 / rw[w] * v.max(0.0));
            }
        }
    };
    let cell_vals = |f: &[f64]| -> Vec<f64> {
        graph.cells().iter().map(|&v| f[v as usize]).collect()
    };

    // starting point: the certificate, scaled onto the deeper constraints
    let mut g = Vec::with_capacity(cells * subs);
    constraint_values(&cell_vals(&cert.f), &mut g);
    let start_scale = g
        .iter()
        .zip(c)
        .map(|(gv, cv)| if *gv > *cv { (cv / gv).sqrt() } else { 1.0 })
        .fold(1.0f64, f64::min);
    let mut best = start_scale * cert.certified_value;
    let mut best_f: Vec<f64> = cert.f.iter().map(|v| start_scale * v).collect();
    let mut upper = f64::INFINITY;
    let mut history = vec![best];
    let mut converged = false;
    let mut iterations = 0;

    if sx != sy && opts.max_iter > 0 {
        let net = CellNetwork {
            graph,
            top: ctx.common_level(x, y)?,
        };
        let mut lambda = vec![1.0 / scale; cells * subs];
        let mut blocks = vec![0.0; cells * qq];
        for it in 0..opts.max_iter {
            iterations = it + 1;
            blocks.iter_mut().for_each(|b| *b = 0.0);
            for w in 0..cells {
                let blk = &mut blocks[w * qq..(w + 1) * qq];
                for s in 0..subs {
                    let l = 2.0 * lambda[w * subs + s] / rw[w];
                    for (b, f) in blk.iter_mut().zip(&forms[s * qq..(s + 1) * qq]) {
                        *b += l * f;
                    }
                }
            }
            let (phi, vals) = net.solve(blocks.clone(), sx, sy)?;
            let r = phi[sy as usize] - phi[sx as usize];
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Internal(format!("effective resistance {r}")));
            }
            upper = upper.min(r.sqrt());
            constraint_values(&vals, &mut g);
            let max_ratio = g
                .iter()
                .zip(c)
                .map(|(gv, cv)| gv / cv)
                .fold(0.0f64, f64::max);
            let s = 1.0 / max_ratio.sqrt();
            let value = s * r;
            if value > best {
                best = value;
                best_f = phi.iter().map(|p| s * p).collect();
            }
            history.push(best);
            if (upper - best) / upper < opts.rtol {
                converged = true;
                break;
            }
            let mut total = 0.0;
            for ((l, gv), cv) in lambda.iter_mut().zip(&g).zip(c) {
                *l *= (gv / (cv * r)).sqrt();
                total += *l * cv;
            }
            let lmax = lambda.iter().fold(0.0f64, |m, &l| m.max(l / total));
            for l in lambda.iter_mut() {
                *l = (*l / total).max(LAMBDA_FLOOR * lmax);
            }
        }
    } else {
        converged = true;
        upper = best;
    }

    let mut min_slack = check_domination(hs, graph, &best_f, h, n)?.min_slack;
    if d > 0 {
        min_slack = min_slack.min(deep_min_slack(hs, graph, &best_f, h, d)?);
    }
    Ok(IntrinsicEstimate {
        level: n,
        constraint_depth: n + d,
        value: best,
        upper,
        certificate_value: cert.certified_value,
        history,
        iterations,
        converged,
        f: best_f,
        min_slack,
        scale,
    })
}
