use std::collections::BTreeMap;

use pcfdist::harmonic::{check_regularity, BoundaryVector};
use pcfdist::io::resolve_spec;
use pcfdist::measures::HarmonicTuple;
use pcfdist::metrics::{discrete_geodesic, embedding_table, geodesic_converge, MetricContext};
use pcfdist::structure::{LevelGraph, VertexRef};

const R_VALUES: &str = include_str!("golden/r_values.json");
const HISTORY: &str = include_str!("golden/sg2_geodesic_history.csv");
const EMBEDDING: &str = include_str!("golden/sg2_embedding_level2.csv");

fn pair_context() -> MetricContext {
    let hs = resolve_spec("gasket:2").unwrap().harmonic_structure().unwrap();
    let h = HarmonicTuple::new(
        vec![BoundaryVector(vec![0.0, 1.0, 1.0]), BoundaryVector(vec![0.0, 0.5, -0.5])],
        3,
    )
    .unwrap();
    MetricContext::new(hs, h).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn renormalization_factors() {
    let golden: BTreeMap<String, f64> = serde_json::from_str(R_VALUES).unwrap();
    for (name, r) in golden {
        let loaded = resolve_spec(&name).unwrap();
        let hs = loaded.harmonic_structure().unwrap();
        assert!(hs.weights().iter().all(|w| (w - r).abs() < 1e-12), "{name}");
        assert!(r > 0.0 && r < 1.0);
        let res = check_regularity(hs.spec(), hs.d(), hs.weights()).unwrap();
        assert!(res <= 1e-10, "{name}: {res}");
    }
}

#[test]
fn sg2_corner_history() {
    let ctx = pair_context();
    let (x, y) = (VertexRef::boundary(0), VertexRef::boundary(1));
    let golden: Vec<(usize, f64)> = rows(HISTORY)
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let n_max = golden.last().unwrap().0;
    let hist = geodesic_converge(&ctx, &x, &y, n_max, 0.0).unwrap();
    assert_eq!(hist.entries.len(), golden.len());
    for ((n, v), (gn, gv)) in hist.entries.iter().zip(&golden) {
        assert_eq!(n, gn);
        assert!((v - gv).abs() <= 1e-12 * gv, "n = {n}");
    }
    assert!((golden[0].1 - 1.25f64.sqrt()).abs() < 1e-15);
    let last = golden.last().unwrap().1;
    let gap = last - golden[golden.len() - 2].1;
    let mut prev = last;
    for n in n_max + 1..=n_max + 2 {
        let v = discrete_geodesic(&ctx, &x, &y, n).unwrap().value;
        assert!(v >= prev - 1e-12);
        assert!(v - last <= 2.0 * gap);
        prev = v;
    }
}

#[test]
fn sg2_embedding() {
    let ctx = pair_context();
    assert_eq!(embedding_table(&ctx, 2).unwrap().lines().count(), EMBEDDING.lines().count());
    let current = rows(&embedding_table(&ctx, 2).unwrap());
    let golden = rows(EMBEDDING);
    let mut coords = Vec::new();
    for (c, g) in current.iter().zip(&golden) {
        assert_eq!(c[..3], g[..3]);
        let gv: Vec<f64> = g[3..].iter().map(|s| s.parse().unwrap()).collect();
        for (a, b) in c[3..].iter().zip(&gv) {
            assert!((a.parse::<f64>().unwrap() - b).abs() < 1e-12);
        }
        coords.push(gv);
    }

    let spec = ctx.harmonic().spec();
    for n in 1..=2 {
        let parent = LevelGraph::build(spec, n - 1).unwrap();
        let child = LevelGraph::build(spec, n).unwrap();
        for idx in 0..child.cell_count() {
            let a = parent.cell(idx / 3);
            let i = idx % 3;
            for (j, &v) in child.cell(idx).iter().enumerate() {
                for comp in 0..2 {
                    let val = |b: usize| coords[a[b] as usize][comp];
                    let expected = if j == i {
                        val(i)
                    } else {
                        (2.0 * val(i) + 2.0 * val(j) + val(3 - i - j)) / 5.0
                    };
                    assert!((coords[v as usize][comp] - expected).abs() < 1e-15);
                }
            }
        }
    }
}
