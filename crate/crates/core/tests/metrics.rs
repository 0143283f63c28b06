use pcfdist::harmonic::{BoundaryVector, HarmonicStructure};
use pcfdist::measures::HarmonicTuple;
use pcfdist::metrics::{
    default_cap, discrete_geodesic, distance_matrix, embedding_table, geodesic_converge,
    geodesic_profile, intrinsic_certificate, intrinsic_estimate, lipschitz_excess,
    weighted_level_graph, IntrinsicOptions, MetricContext,
};
use pcfdist::structure::{generate_spec, FractalKind, LevelGraph, VertexRef, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hs(kind: FractalKind, p: usize) -> HarmonicStructure {
    HarmonicStructure::standard(&generate_spec(kind, p).unwrap()).unwrap()
}

fn sg2() -> MetricContext {
    MetricContext::standard(hs(FractalKind::Gasket, 2))
}

fn corner(b: usize) -> VertexRef {
    VertexRef::boundary(b)
}

/// Edge list of `V_n` with weights from cell-wise extension of the tuple.
fn oracle_edges(hs: &HarmonicStructure, h: &HarmonicTuple, g: &LevelGraph) -> Vec<(usize, usize, f64)> {
    let n = g.level();
    let q = hs.q();
    let mut out = Vec::new();
    for idx in 0..g.cell_count() {
        let w = Word::from_index(idx, n, hs.k());
        let vals: Vec<Vec<f64>> = h
            .components()
            .iter()
            .map(|a| hs.apply_word(w.letters(), &a.0))
            .collect();
        let cell = g.cell(idx);
        for a in 0..q {
            for b in a + 1..q {
                let d2: f64 = vals.iter().map(|v| (v[a] - v[b]).powi(2)).sum();
                out.push((cell[a] as usize, cell[b] as usize, d2.sqrt()));
            }
        }
    }
    out
}

fn floyd_warshall(nv: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; nv]; nv];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..nv {
        for i in 0..nv {
            for j in 0..nv {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn simple_path_min(adj: &[Vec<(usize, f64)>], cur: usize, target: usize, seen: &mut Vec<bool>, acc: f64) -> f64 {
    if cur == target {
        return acc;
    }
    let mut best = f64::INFINITY;
    for &(nb, w) in &adj[cur] {
        if !seen[nb] {
            seen[nb] = true;
            best = best.min(simple_path_min(adj, nb, target, seen, acc + w));
            seen[nb] = false;
        }
    }
    best
}

#[test]
fn level_one_matches_path_enumeration() {
    let ctx = sg2();
    let g = LevelGraph::build(ctx.harmonic().spec(), 1).unwrap();
    let edges = oracle_edges(ctx.harmonic(), ctx.tuple(), &g);
    let nv = g.vertex_count();
    let mut adj = vec![Vec::new(); nv];
    for &(a, b, w) in &edges {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    for x in 0..3 {
        for y in 0..3 {
            let mut seen = vec![false; nv];
            seen[x] = true;
            let brute = simple_path_min(&adj, x, y, &mut seen, 0.0);
            let got = discrete_geodesic(&ctx, &corner(x), &corner(y), 1).unwrap().value;
            assert!((brute - got).abs() < 1e-14, "{x}->{y}: {brute} vs {got}");
        }
    }
}

#[test]
fn all_pairs_match_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (kind, p, n) in [(FractalKind::Gasket, 2, 3), (FractalKind::Gasket, 3, 2), (FractalKind::Polygasket, 6, 2)] {
        let hs = hs(kind, p);
        let comps = (0..2)
            .map(|_| BoundaryVector((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let h = HarmonicTuple::new(comps, 3).unwrap();
        let ctx = MetricContext::new(hs.clone(), h.clone()).unwrap();
        let g = LevelGraph::build(hs.spec(), n).unwrap();
        let nv = g.vertex_count();
        let fw = floyd_warshall(nv, &oracle_edges(&hs, &h, &g));
        let sources: Vec<u32> = (0..nv as u32).collect();
        let dm = distance_matrix(&ctx, &sources, n, 1).unwrap();
        for i in 0..nv {
            for j in 0..nv {
                assert!((dm[i][j] - fw[i][j]).abs() < 1e-12, "{} {i} {j}", hs.spec().name);
            }
        }
    }
}

#[test]
fn edge_weights_match_examples() {
    let ctx = sg2();
    for (a, b, w) in weighted_level_graph(&ctx, 0).unwrap() {
        assert!(a < b);
        assert!((w - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
    let h = HarmonicTuple::new(vec![BoundaryVector(vec![1.0, 0.0, 0.0])], 3).unwrap();
    let single = MetricContext::new(hs(FractalKind::Gasket, 2), h).unwrap();
    let l0 = single.level(0).unwrap();
    assert_eq!(l0.weight(0, 1), 1.0);
    assert_eq!(l0.weight(0, 2), 1.0);
    assert_eq!(l0.weight(1, 2), 0.0);
    assert_eq!(discrete_geodesic(&single, &corner(1), &corner(2), 0).unwrap().value, 0.0);
    let mid = discrete_geodesic(&single, &corner(1), &corner(2), 1).unwrap().value;
    assert!((mid - 0.4).abs() < 1e-15);
}

#[test]
fn metric_axioms_and_chord_bound() {
    let ctx = sg2();
    let n = 4;
    let level = ctx.level(n).unwrap();
    let nv = level.graph().vertex_count() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sources: Vec<u32> = (0..30).map(|_| rng.random_range(0..nv)).collect();
    let dm = distance_matrix(&ctx, &sources, n, 2).unwrap();
    for i in 0..sources.len() {
        for j in 0..sources.len() {
            assert!((dm[i][j] - dm[j][i]).abs() < 1e-12);
            let chord: f64 = level
                .coord(sources[i])
                .iter()
                .zip(level.coord(sources[j]))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dm[i][j] >= chord - 1e-12);
            for l in 0..sources.len() {
                assert!(dm[i][l] <= dm[i][j] + dm[j][l] + 1e-12);
            }
        }
    }
}

#[test]
fn profiles_are_lipschitz_and_grow_with_level() {
    let ctx = sg2();
    let x = VertexRef::parse("01:2", 3, 3).unwrap();
    let mut prev: Option<Vec<f64>> = None;
    for n in 2..=7 {
        let phi = geodesic_profile(&ctx, &x, n).unwrap();
        let level = ctx.level(n).unwrap();
        assert!(lipschitz_excess(&level, &phi) <= 1e-12);
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&phi) {
                assert!(*b >= a - 1e-12);
            }
        }
        prev = Some(phi);
    }
}

#[test]
fn convergence_history_is_monotone() {
    let ctx = sg2();
    let hist = geodesic_converge(&ctx, &corner(0), &corner(1), 8, 0.0).unwrap();
    assert_eq!(hist.entries.len(), 9);
    assert!(hist.monotone);
    assert!(!hist.converged);
    let early = geodesic_converge(&ctx, &corner(0), &corner(1), 30, 1e-3).unwrap();
    assert!(early.converged);
    assert!(early.relative_gap < 1e-3);
    let x = VertexRef::parse("00:1", 3, 3).unwrap();
    assert!(geodesic_converge(&ctx, &x, &corner(1), 1, 0.0).is_err());
}

#[test]
fn certificate_respects_the_cap() {
    let ctx = sg2();
    let (x, y) = (corner(0), corner(1));
    let zero = intrinsic_certificate(&ctx, &x, &y, 4, 0.0).unwrap();
    assert_eq!(zero.certified_value, 0.0);
    assert!(zero.feasible());
    let rho = discrete_geodesic(&ctx, &x, &y, 5).unwrap().value;
    for cap in [0.3, 0.7, default_cap(ctx.harmonic(), ctx.tuple())] {
        let cert = intrinsic_certificate(&ctx, &x, &y, 5, cap).unwrap();
        assert_eq!(cert.certified_value, rho.min(cap));
        assert!(cert.feasible(), "cap {cap}: {}", cert.slack.min_slack);
    }
    assert!(intrinsic_certificate(&ctx, &x, &y, 3, -1.0).is_err());
    assert!(intrinsic_certificate(&ctx, &x, &y, 3, f64::NAN).is_err());
    let json: serde_json::Value =
        serde_json::from_str(&intrinsic_certificate(&ctx, &x, &y, 3, 1.0).unwrap().to_json()).unwrap();
    assert_eq!(json["feasible"], true);
    assert_eq!(json["level"], 3);
}

#[test]
fn intrinsic_estimate_bounds() {
    let ctx = sg2();
    let (x, y) = (corner(0), corner(2));
    let opts = IntrinsicOptions { max_iter: 0, ..Default::default() };
    let zero = intrinsic_estimate(&ctx, &x, &y, 4, &opts).unwrap();
    assert_eq!(zero.value, zero.certificate_value);
    let est = intrinsic_estimate(&ctx, &x, &y, 4, &IntrinsicOptions::default()).unwrap();
    assert!(est.value >= est.certificate_value - 1e-9);
    assert!(est.value <= est.upper * (1.0 + 1e-9));
    assert!(est.history.windows(2).all(|w| w[1] >= w[0]));
    assert!(est.min_slack >= -1e-9 * est.scale);
    let same = intrinsic_estimate(&ctx, &x, &x, 4, &IntrinsicOptions::default()).unwrap();
    assert_eq!(same.value, 0.0);
}

#[test]
fn embedding_rows() {
    let ctx = sg2();
    let t0 = embedding_table(&ctx, 0).unwrap();
    let rows: Vec<&str> = t0.lines().collect();
    assert_eq!(rows[0], "id,word,label,x_1,x_2");
    for b in 0..3 {
        let fields: Vec<&str> = rows[b + 1].split(',').collect();
        assert_eq!(fields[1], "-");
        for (j, comp) in ctx.tuple().components().iter().enumerate() {
            let v: f64 = fields[3 + j].parse().unwrap();
            assert_eq!(v, comp.0[b]);
        }
    }
    let t2 = embedding_table(&ctx, 2).unwrap();
    let t3 = embedding_table(&ctx, 3).unwrap();
    assert!(t3.starts_with(&t2));
}

#[test]
fn distance_matrix_is_thread_independent() {
    let ctx = sg2();
    let sources: Vec<u32> = (0..15).collect();
    let one = distance_matrix(&ctx, &sources, 6, 1).unwrap();
    for threads in [2, 4] {
        let many = distance_matrix(&ctx, &sources, 6, threads).unwrap();
        for (a, b) in one.iter().flatten().zip(many.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
    assert!(distance_matrix(&ctx, &[10_000], 2, 1).is_err());
}
