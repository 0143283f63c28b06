//! Builtin generators. Geometry is used once, to derive the glue rules and
//! fixed letters; everything downstream is combinatorial.

use std::collections::BTreeMap;

use nalgebra::Complex;

use super::{FractalSpec, GlueRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FractalKind {
    /// Level-`l` Sierpinski gasket, `l >= 2`.
    Gasket,
    /// Hexagasket (`n = 6`) or nonagasket (`n = 9`).
    Polygasket,
}

const MATCH_TOL: f64 = 1e-9;

pub fn generate_spec(kind: FractalKind, param: usize) -> Result<FractalSpec> {
    match kind {
        FractalKind::Gasket => gasket(param),
        FractalKind::Polygasket => polygasket(param),
    }
}

/// Cells are the upward triangles of the side-`l` triangular lattice, in
/// integer coordinates `(x, y)` with `x + y <= l`; vertex `b` of a cell sits
/// at offset `(0,0)`, `(1,0)`, `(0,1)`.
fn gasket(l: usize) -> Result<FractalSpec> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!(
            "gasket level must be >= 2, got {l}"
        )));
    }
    if l * (l + 1) / 2 > u16::MAX as usize {
        return Err(Error::InvalidParameter(format!("gasket level {l} too large")));
    }
    const OFFSETS: [(usize, usize); 3] = [(0, 0), (1, 0), (0, 1)];
    let mut corners = Vec::new();
    for y in 0..l {
        for x in 0..l - y {
            corners.push((x, y));
        }
    }
    let mut at_point: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (cell, &(x, y)) in corners.iter().enumerate() {
        for (label, &(dx, dy)) in OFFSETS.iter().enumerate() {
            at_point.entry((x + dx, y + dy)).or_default().push((cell, label));
        }
    }
    let glue = pairwise_rules(at_point.into_values());
    let cell_at = |p: (usize, usize)| corners.iter().position(|&c| c == p).unwrap();
    let fixed_letters = vec![cell_at((0, 0)), cell_at((l - 1, 0)), cell_at((0, l - 1))];
    Ok(FractalSpec {
        name: format!("gasket:{l}"),
        letters: corners.len(),
        boundary: 3,
        fixed_letters,
        glue,
    })
}

/// `ψ_k(z) = p_k (β (z - 1) + 1)` with `p_k = exp(2πik/n)`, except that the
/// three cells at the boundary points use the plain homothety
/// `βz + (1 - β) p_k`, which has the same image but fixes `p_k`.
fn polygasket(n: usize) -> Result<FractalSpec> {
    if n != 6 && n != 9 {
        return Err(Error::InvalidParameter(format!(
            "polygasket supports n = 6 or 9, got {n}"
        )));
    }
    let nf = n as f64;
    let beta = 2.0 / (3.0 + 3f64.sqrt() / (std::f64::consts::PI / nf).tan());
    let p = |m: usize| Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / nf);
    let boundary: Vec<Complex<f64>> = (0..3).map(|b| p(b * n / 3)).collect();
    let is_boundary_cell = |k: usize| k.is_multiple_of(n / 3);
    let map = |k: usize, z: Complex<f64>| {
        if is_boundary_cell(k) {
            z * beta + p(k) * (1.0 - beta)
        } else {
            p(k) * ((z - 1.0) * beta + 1.0)
        }
    };

    let mut images = Vec::new();
    for k in 0..n {
        for (b, &z) in boundary.iter().enumerate() {
            images.push(((k, b), map(k, z)));
        }
    }
    // group coincident images
    let mut groups: Vec<(Complex<f64>, Vec<(usize, usize)>)> = Vec::new();
    for &(addr, z) in &images {
        match groups.iter_mut().find(|(c, _)| (c - z).norm() < MATCH_TOL) {
            Some((_, members)) => members.push(addr),
            None => groups.push((z, vec![addr])),
        }
    }
    let glue = pairwise_rules(groups.into_iter().map(|(_, m)| m));

    let mut fixed_letters = Vec::new();
    for (b, &pb) in boundary.iter().enumerate() {
        let k = (0..n)
            .find(|&k| (map(k, pb) - pb).norm() < MATCH_TOL)
            .ok_or_else(|| Error::Internal(format!("no cell fixes boundary point {b}")))?;
        fixed_letters.push(k);
    }
    let name = match n {
        6 => "hexagasket",
        _ => "nonagasket",
    };
    Ok(FractalSpec {
        name: name.to_string(),
        letters: n,
        boundary: 3,
        fixed_letters,
        glue,
    })
}

/// All pairs of addresses from different cells sharing a point.
fn pairwise_rules<I>(groups: I) -> Vec<GlueRule>
where
    I: IntoIterator<Item = Vec<(usize, usize)>>,
{
    let mut rules = Vec::new();
    for members in groups {
        for (s, &a) in members.iter().enumerate() {
            for &b in &members[s + 1..] {
                if a.0 != b.0 {
                    let (x, y) = if a < b { (a, b) } else { (b, a) };
                    rules.push(GlueRule::new(x.0, x.1, y.0, y.1));
                }
            }
        }
    }
    rules.sort();
    rules
}
