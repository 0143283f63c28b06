use std::collections::HashMap;

use nalgebra::Complex;
use pcfdist::structure::{generate_spec, FractalKind, LevelGraph, VertexRef, Word};
use pcfdist::FractalSpec;
use proptest::prelude::*;

/// Points `ψ_w(p_b)` for every level-`n` address, in cell order.
fn gasket_points(l: i64, n: usize) -> Vec<(i64, i64)> {
    let mut corners = Vec::new();
    for y in 0..l {
        for x in 0..l - y {
            corners.push((x, y));
        }
    }
    let labels = [(0, 0), (1, 0), (0, 1)];
    let k = corners.len();
    let mut out = Vec::new();
    for idx in 0..k.pow(n as u32) {
        let w = Word::from_index(idx, n, k);
        let mut base = (0i64, 0i64);
        for letter in w.letters() {
            base = (base.0 * l + corners[letter].0, base.1 * l + corners[letter].1);
        }
        for &(dx, dy) in &labels {
            out.push((base.0 + dx, base.1 + dy));
        }
    }
    out
}

fn polygasket_points(ng: usize, n: usize) -> Vec<Complex<f64>> {
    let nf = ng as f64;
    let beta = 2.0 / (3.0 + 3f64.sqrt() / (std::f64::consts::PI / nf).tan());
    let p = |m: usize| Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / nf);
    let map = |k: usize, z: Complex<f64>| {
        if k % (ng / 3) == 0 {
            z * beta + p(k) * (1.0 - beta)
        } else {
            p(k) * ((z - 1.0) * beta + 1.0)
        }
    };
    let mut out = Vec::new();
    for idx in 0..ng.pow(n as u32) {
        let w = Word::from_index(idx, n, ng);
        for b in 0..3 {
            let mut z = p(b * ng / 3);
            for letter in w.letters().collect::<Vec<_>>().into_iter().rev() {
                z = map(letter, z);
            }
            out.push(z);
        }
    }
    out
}

/// Checks that `graph` identifies exactly the coincident points.
fn assert_matches_geometry<K: Copy>(graph: &LevelGraph, points: &[K], key: impl Fn(K) -> Vec<(i64, i64)>) {
    let mut by_key: HashMap<(i64, i64), u32> = HashMap::new();
    let mut point_of_id: HashMap<u32, (i64, i64)> = HashMap::new();
    for (slot, &pt) in points.iter().enumerate() {
        let id = graph.cells()[slot];
        let keys = key(pt);
        let found = keys.iter().find_map(|k| by_key.get(k).copied());
        match found {
            Some(other) => assert_eq!(other, id, "coincident points got different ids"),
            None => {
                assert!(
                    !point_of_id.contains_key(&id),
                    "id {id} names two different points"
                );
                by_key.insert(keys[0], id);
                point_of_id.insert(id, keys[0]);
            }
        }
    }
    assert_eq!(point_of_id.len(), graph.vertex_count());
}

fn exact(p: (i64, i64)) -> Vec<(i64, i64)> {
    vec![p]
}

fn snapped(z: Complex<f64>) -> Vec<(i64, i64)> {
    const GRID: f64 = 1e-7;
    let (x, y) = ((z.re / GRID).round() as i64, (z.im / GRID).round() as i64);
    let mut keys = vec![(x, y)];
    for dx in -1..=1 {
        for dy in -1..=1 {
            if (dx, dy) != (0, 0) {
                keys.push((x + dx, y + dy));
            }
        }
    }
    keys
}

#[test]
fn gasket_vertices_match_lattice_points() {
    for l in [2usize, 3] {
        let spec = generate_spec(FractalKind::Gasket, l).unwrap();
        for n in 0..=4 {
            let g = LevelGraph::build(&spec, n).unwrap();
            assert_matches_geometry(&g, &gasket_points(l as i64, n), exact);
        }
    }
}

#[test]
fn polygasket_vertices_match_plane_points() {
    for ng in [6usize, 9] {
        let spec = generate_spec(FractalKind::Polygasket, ng).unwrap();
        for n in 0..=3 {
            let g = LevelGraph::build(&spec, n).unwrap();
            assert_matches_geometry(&g, &polygasket_points(ng, n), snapped);
        }
    }
}

#[test]
fn sg2_vertex_counts() {
    let spec = generate_spec(FractalKind::Gasket, 2).unwrap();
    for n in 0..8 {
        let g = LevelGraph::build(&spec, n).unwrap();
        assert_eq!(g.vertex_count(), (3usize.pow(n as u32 + 1) + 3) / 2);
        assert_eq!(g.cell_count(), 3usize.pow(n as u32));
        assert!(g.is_connected());
    }
}

#[test]
fn resource_bound_is_reported() {
    let spec = generate_spec(FractalKind::Gasket, 2).unwrap();
    assert!(matches!(
        LevelGraph::build(&spec, 40),
        Err(pcfdist::Error::Resource { level: 40, .. })
    ));
}

fn specs() -> Vec<FractalSpec> {
    vec![
        generate_spec(FractalKind::Gasket, 2).unwrap(),
        generate_spec(FractalKind::Gasket, 3).unwrap(),
        generate_spec(FractalKind::Polygasket, 6).unwrap(),
        generate_spec(FractalKind::Polygasket, 9).unwrap(),
    ]
}

fn arb_ref() -> impl Strategy<Value = (usize, Vec<usize>, usize)> {
    (0usize..4, prop::collection::vec(0usize..9, 0..5), 0usize..3)
}

proptest! {
    #[test]
    fn canonical_form_is_idempotent_and_in_orbit((s, letters, label) in arb_ref()) {
        let spec = &specs()[s];
        let letters: Vec<usize> = letters.into_iter().map(|l| l % spec.letters).collect();
        let r = VertexRef::new(Word::from_letters(&letters), label);
        let c = spec.canonicalize(&r);
        prop_assert_eq!(spec.canonicalize(&c), c.clone());
        prop_assert!(spec.orbit(&r).contains(&c));
        prop_assert!(c <= r);
    }

    #[test]
    fn ids_survive_lifting((s, letters, label) in arb_ref(), extra in 0usize..3) {
        let spec = &specs()[s];
        let letters: Vec<usize> = letters.into_iter().map(|l| l % spec.letters).collect();
        let r = VertexRef::new(Word::from_letters(&letters), label);
        let m = r.level();
        let lo = LevelGraph::build(spec, m).unwrap();
        let hi = LevelGraph::build(spec, m + extra).unwrap();
        let lifted = spec.lift(&r, m + extra).unwrap();
        prop_assert_eq!(lo.id_of(&r).unwrap(), hi.id_of(&r).unwrap());
        prop_assert_eq!(hi.id_of(&lifted).unwrap(), hi.id_of(&r).unwrap());
        let id = lo.id_of(&r).unwrap();
        prop_assert_eq!(lo.id_of(&lo.canonical_ref(id)).unwrap(), id);
    }

    #[test]
    fn vertex_text_roundtrips((s, letters, label) in arb_ref()) {
        let spec = &specs()[s];
        let letters: Vec<usize> = letters.into_iter().map(|l| l % spec.letters).collect();
        let r = VertexRef::new(Word::from_letters(&letters), label);
        let text = r.to_text(spec.letters);
        prop_assert_eq!(VertexRef::parse(&text, spec.letters, 3).unwrap(), r);
    }
}
