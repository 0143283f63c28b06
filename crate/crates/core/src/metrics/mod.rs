//! Discrete geodesic distances over the harmonic embedding, their
//! convergence, and intrinsic-distance certificates and estimates.

mod certificate;
mod intrinsic;

pub use certificate::{default_cap, intrinsic_certificate, Certificate};
pub use intrinsic::{intrinsic_estimate, IntrinsicEstimate, IntrinsicOptions};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonic::HarmonicStructure;
use crate::io::fmt_f64;
use crate::measures::HarmonicTuple;
use crate::structure::{LevelGraph, VertexRef, Word};

/// Slack allowed on monotonicity and Lipschitz assertions.
pub const EXACT_TOL: f64 = 1e-12;

/// `V_n` with harmonic coordinates and the vertex-to-cell incidence.
#[derive(Debug)]
pub struct Level {
    graph: LevelGraph,
    dim: usize,
    coords: Vec<f64>,
    inc_start: Vec<u32>,
    inc_cells: Vec<u32>,
}

impl Level {
    pub fn graph(&self) -> &LevelGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `h(z) ∈ R^N`.
    pub fn coord(&self, id: u32) -> &[f64] {
        let i = id as usize * self.dim;
        &self.coords[i..i + self.dim]
    }

    /// `|h(a) − h(b)|`.
    #[inline]
    pub fn weight(&self, a: u32, b: u32) -> f64 {
        self.coord(a)
            .iter()
            .zip(self.coord(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Level-`n` cells containing `id`, increasing.
    pub fn cells_of(&self, id: u32) -> &[u32] {
        &self.inc_cells[self.inc_start[id as usize] as usize..self.inc_start[id as usize + 1] as usize]
    }

    /// Every vertex adjacent to `id` (sharing a cell), with repetition when
    /// two cells share an edge.
    pub fn neighbours(&self, id: u32) -> impl Iterator<Item = u32> + '_ {
        self.cells_of(id).iter().flat_map(move |&c| {
            self.graph
                .cell(c as usize)
                .iter()
                .copied()
                .filter(move |&v| v != id)
        })
    }
}

/// Coordinates of every vertex, evaluated at its canonical birth address so
/// that they do not depend on the level of the graph.
///
/// A depth-first walk over cells carries `A_w α_j`; the vertices born inside
/// a parent cell read their value from the child holding their address.
fn coordinates(hs: &HarmonicStructure, h: &HarmonicTuple, graph: &LevelGraph) -> Vec<f64> {
    let (q, k, dim, n) = (hs.q(), hs.k(), h.len(), graph.level());
    let template = graph.template();
    let ti = template.interior_count();
    let stride = dim * q;
    let mut coords = vec![0.0; graph.vertex_count() * dim];
    let root: Vec<f64> = h.components().iter().flat_map(|c| c.0.clone()).collect();
    for b in 0..q {
        for j in 0..dim {
            coords[b * dim + j] = root[j * q + b];
        }
    }
    if n == 0 {
        return coords;
    }
    // stack[m] holds the values of the current level-m cell
    let mut stack = vec![vec![0.0; stride]; n];
    stack[0] = root;
    let mut child = vec![0.0; stride];
    let mut todo = vec![(0usize, 0usize)];
    while let Some((m, u)) = todo.pop() {
        if m > 0 {
            let (above, below) = stack.split_at_mut(m);
            for j in 0..dim {
                let r = j * q..(j + 1) * q;
                hs.apply_into(u % k, &above[m - 1][r.clone()], &mut below[0][r]);
            }
        }
        let base = graph.level_size(m);
        for c in 0..ti {
            let (i, b) = template.min_address[q + c];
            for j in 0..dim {
                let r = j * q..(j + 1) * q;
                hs.apply_into(i, &stack[m][r.clone()], &mut child[r]);
            }
            let id = base + u * ti + c;
            for j in 0..dim {
                coords[id * dim + j] = child[j * q + b];
            }
        }
        if m + 1 < n {
            todo.extend((0..k).rev().map(|i| (m + 1, u * k + i)));
        }
    }
    coords
}

fn incidence(graph: &LevelGraph) -> (Vec<u32>, Vec<u32>) {
    let nv = graph.vertex_count();
    let mut start = vec![0u32; nv + 1];
    for &v in graph.cells() {
        start[v as usize + 1] += 1;
    }
    for i in 0..nv {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut cells = vec![0u32; graph.cells().len()];
    for (idx, cell) in graph.cells().chunks_exact(graph.boundary()).enumerate() {
        for &v in cell {
            cells[fill[v as usize] as usize] = idx as u32;
            fill[v as usize] += 1;
        }
    }
    (start, cells)
}

/// Shared immutable data for metric computations with a lazily filled
/// cache of levels.
#[derive(Debug)]
pub struct MetricContext {
    hs: HarmonicStructure,
    h: HarmonicTuple,
    cache: Mutex<BTreeMap<usize, Arc<Level>>>,
}

impl MetricContext {
    pub fn new(hs: HarmonicStructure, h: HarmonicTuple) -> Result<Self> {
        if h.components().iter().any(|c| c.0.len() != hs.q()) {
            return Err(Error::InvalidArgument(
                "tuple length does not match the boundary size".into(),
            ));
        }
        Ok(MetricContext {
            hs,
            h,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    /// Uses the default orthonormal tuple.
    pub fn standard(hs: HarmonicStructure) -> Self {
        let h = HarmonicTuple::standard(&hs);
        MetricContext {
            hs,
            h,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn harmonic(&self) -> &HarmonicStructure {
        &self.hs
    }

    pub fn tuple(&self) -> &HarmonicTuple {
        &self.h
    }

    pub fn level(&self, n: usize) -> Result<Arc<Level>> {
        if let Some(l) = self.cache.lock().unwrap().get(&n) {
            return Ok(l.clone());
        }
        let graph = LevelGraph::build(self.hs.spec(), n)?;
        let coords = coordinates(&self.hs, &self.h, &graph);
        let (inc_start, inc_cells) = incidence(&graph);
        let level = Arc::new(Level {
            graph,
            dim: self.h.len(),
            coords,
            inc_start,
            inc_cells,
        });
        Ok(self
            .cache
            .lock()
            .unwrap()
            .entry(n)
            .or_insert(level)
            .clone())
    }

    /// Drops cached levels.
    pub fn clear_cache(&self) {
        self.cache.lock().unwrap().clear();
    }

    /// An address at the smallest level naming the same point as `r`.
    pub fn shallowest(&self, r: &VertexRef) -> Result<VertexRef> {
        let spec = self.hs.spec();
        spec.check_ref(r)?;
        let mut cur = spec.canonicalize(r);
        'outer: while !cur.word.is_empty() {
            for alt in spec.orbit(&cur) {
                let last = alt.word.letter(alt.word.len() - 1);
                if last == spec.fixed_letters[alt.label] {
                    let letters = alt.word.0[..alt.word.len() - 1].to_vec();
                    cur = spec.canonicalize(&VertexRef::new(Word(letters), alt.label));
                    continue 'outer;
                }
            }
            break;
        }
        Ok(cur)
    }

    /// Id of `r` in `V_n`; errors when the point is not in `V_n`.
    pub fn vertex_id(&self, r: &VertexRef, n: usize) -> Result<u32> {
        let s = self.shallowest(r)?;
        if s.level() > n {
            return Err(Error::InvalidArgument(format!(
                "{} first appears in V_{}, not in V_{n}",
                r.to_text(self.hs.k()),
                s.level()
            )));
        }
        self.level(n)?.graph().id_of(&s)
    }

    /// Smallest `n` with `x, y ∈ V_n`.
    pub fn common_level(&self, x: &VertexRef, y: &VertexRef) -> Result<usize> {
        Ok(self.shallowest(x)?.level().max(self.shallowest(y)?.level()))
    }

    /// `h(x)`.
    pub fn coordinates_of(&self, r: &VertexRef) -> Result<Vec<f64>> {
        let s = self.shallowest(r)?;
        let lv = self.level(s.level())?;
        Ok(lv.coord(lv.graph().id_of(&s)?).to_vec())
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    id: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra; stops once `target` is settled.
fn dijkstra(level: &Level, source: u32, target: Option<u32>) -> (Vec<f64>, Vec<u32>) {
    let nv = level.graph.vertex_count();
    let mut dist = vec![f64::INFINITY; nv];
    let mut pred = vec![u32::MAX; nv];
    let mut done = vec![false; nv];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(HeapItem { dist: 0.0, id: source });
    while let Some(HeapItem { dist: d, id }) = heap.pop() {
        if done[id as usize] {
            continue;
        }
        done[id as usize] = true;
        if Some(id) == target {
            break;
        }
        for v in level.neighbours(id) {
            if done[v as usize] {
                continue;
            }
            let nd = d + level.weight(id, v);
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                pred[v as usize] = id;
                heap.push(HeapItem { dist: nd, id: v });
            }
        }
    }
    (dist, pred)
}

/// Table of pairwise edge weights; exposed for inspection and tests.
pub fn weighted_level_graph(ctx: &MetricContext, n: usize) -> Result<Vec<(u32, u32, f64)>> {
    let level = ctx.level(n)?;
    let mut edges = BTreeMap::new();
    for cell in level.graph.cells().chunks_exact(level.graph.boundary()) {
        for (a, &u) in cell.iter().enumerate() {
            for &v in &cell[a + 1..] {
                let key = (u.min(v), u.max(v));
                edges.entry(key).or_insert_with(|| level.weight(key.0, key.1));
            }
        }
    }
    Ok(edges.into_iter().map(|((a, b), w)| (a, b, w)).collect())
}

/// `ρ̂^(n)(x, y)` with a shortest walk.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult {
    pub level: usize,
    pub value: f64,
    /// Vertex ids from `x` to `y`.
    pub path: Vec<u32>,
}

pub fn discrete_geodesic(
    ctx: &MetricContext,
    x: &VertexRef,
    y: &VertexRef,
    n: usize,
) -> Result<GeodesicResult> {
    let level = ctx.level(n)?;
    let (sx, sy) = (ctx.vertex_id(x, n)?, ctx.vertex_id(y, n)?);
    geodesic_between(&level, sx, sy)
}

pub fn geodesic_between(level: &Level, from: u32, to: u32) -> Result<GeodesicResult> {
    let (dist, pred) = dijkstra(level, from, Some(to));
    let value = dist[to as usize];
    if !value.is_finite() {
        return Err(Error::Internal(format!("vertex {to} unreachable from {from}")));
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = pred[cur as usize];
        path.push(cur);
    }
    path.reverse();
    Ok(GeodesicResult {
        level: level.graph.level(),
        value,
        path,
    })
}

/// `φ_n(z) = ρ̂^(n)(x, z)` for every `z ∈ V_n`.
pub fn geodesic_profile(ctx: &MetricContext, x: &VertexRef, n: usize) -> Result<Vec<f64>> {
    let level = ctx.level(n)?;
    let source = ctx.vertex_id(x, n)?;
    profile_from(&level, source)
}

pub fn profile_from(level: &Level, source: u32) -> Result<Vec<f64>> {
    let (dist, _) = dijkstra(level, source, None);
    if dist.iter().any(|d| !d.is_finite()) {
        return Err(Error::Internal("level graph is disconnected".into()));
    }
    Ok(dist)
}

/// `max (|f(z) − f(z′)| − |h(z) − h(z′)|)` over adjacent pairs.
pub fn lipschitz_excess(level: &Level, f: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for cell in level.graph.cells().chunks_exact(level.graph.boundary()) {
        for (a, &u) in cell.iter().enumerate() {
            for &v in &cell[a + 1..] {
                let e = (f[u as usize] - f[v as usize]).abs() - level.weight(u, v);
                worst = worst.max(e);
            }
        }
    }
    worst
}

/// `ρ̂^(n)(x, y)` for increasing `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceHistory {
    pub entries: Vec<(usize, f64)>,
    /// Last value: a lower approximation of `ρ_h(x, y)`.
    pub estimate: f64,
    /// `(ρ̂^(n) − ρ̂^(n−1)) / ρ̂^(n)` of the last step.
    pub relative_gap: f64,
    /// Aitken extrapolation of the last three values; reporting only.
    pub extrapolated: Option<f64>,
    pub monotone: bool,
    pub converged: bool,
}

impl ConvergenceHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value\n");
        for (n, v) in &self.entries {
            let _ = writeln!(out, "{n},{}", fmt_f64(*v));
        }
        out
    }
}

fn aitken(a: f64, b: f64, c: f64) -> Option<f64> {
    let denom = (c - b) - (b - a);
    if denom.abs() <= 1e-15 * c.abs().max(1.0) {
        return None;
    }
    Some(c - (c - b) * (c - b) / denom)
}

pub fn geodesic_converge(
    ctx: &MetricContext,
    x: &VertexRef,
    y: &VertexRef,
    n_max: usize,
    rtol: f64,
) -> Result<ConvergenceHistory> {
    let start = ctx.common_level(x, y)?;
    if n_max < start {
        return Err(Error::InvalidArgument(format!(
            "n_max = {n_max} is below the level {start} of the pair"
        )));
    }
    let mut entries: Vec<(usize, f64)> = Vec::new();
    let mut relative_gap = f64::INFINITY;
    let mut converged = false;
    for n in start..=n_max {
        let value = discrete_geodesic(ctx, x, y, n)?.value;
        if let Some(&(_, prev)) = entries.last() {
            relative_gap = if value > 0.0 { (value - prev) / value } else { 0.0 };
        }
        entries.push((n, value));
        if entries.len() >= 2 && relative_gap.abs() < rtol {
            converged = true;
            break;
        }
    }
    let monotone = entries.windows(2).all(|w| w[1].1 - w[0].1 >= -EXACT_TOL);
    let estimate = entries.last().unwrap().1;
    let extrapolated = match entries.len() {
        l if l >= 3 => aitken(entries[l - 3].1, entries[l - 2].1, entries[l - 1].1),
        _ => None,
    };
    if entries.len() == 1 {
        relative_gap = 0.0;
    }
    Ok(ConvergenceHistory {
        entries,
        estimate,
        relative_gap,
        extrapolated,
        monotone,
        converged,
    })
}

/// `id,word,label,x_1..x_N` for every vertex of `V_n`, by id.
pub fn embedding_table(ctx: &MetricContext, n: usize) -> Result<String> {
    let level = ctx.level(n)?;
    let k = ctx.hs.k();
    let mut out = String::from("id,word,label");
    for j in 1..=level.dim {
        let _ = write!(out, ",x_{j}");
    }
    out.push('\n');
    for id in 0..level.graph.vertex_count() as u32 {
        let r = level.graph.canonical_ref(id);
        let _ = write!(out, "{id},{},{}", r.word.to_text(k), r.label);
        for x in level.coord(id) {
            let _ = write!(out, ",{}", fmt_f64(*x));
        }
        out.push('\n');
    }
    Ok(out)
}

/// `ρ̂^(n)` between all pairs of `sources` (ids of `V_n`), one Dijkstra
/// per source on a pool of `threads` workers.
pub fn distance_matrix(
    ctx: &MetricContext,
    sources: &[u32],
    n: usize,
    threads: usize,
) -> Result<Vec<Vec<f64>>> {
    let level = ctx.level(n)?;
    if let Some(&bad) = sources.iter().find(|&&s| s as usize >= level.graph.vertex_count()) {
        return Err(Error::InvalidArgument(format!("vertex {bad} not in V_{n}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| {
        sources
            .par_iter()
            .map(|&s| {
                let dist = profile_from(&level, s)?;
                Ok(sources.iter().map(|&t| dist[t as usize]).collect())
            })
            .collect()
    })
}
