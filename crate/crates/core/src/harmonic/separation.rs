//! The constant `δ′ = min_{u ∈ l̃(V_0), |u| = 1} max(|(u_i,u)|, |(u_j,u)|)`.

use super::HarmonicStructure;
use crate::error::{Error, Result};
use crate::linalg;

const SCAN_POINTS: usize = 100_000;

/// `δ′` for the fixed points of boundary labels `i` and `j` (`q = 3`).
pub fn separation_constant(hs: &HarmonicStructure, i: usize, j: usize) -> Result<f64> {
    if hs.q() != 3 {
        return Err(Error::InvalidArgument(format!(
            "separation constant needs q = 3, got {}",
            hs.q()
        )));
    }
    if i == j || i >= 3 || j >= 3 {
        return Err(Error::InvalidArgument(format!("labels ({i}, {j}) must be distinct")));
    }
    separation_constant_of(&hs.fixed_point(i).u, &hs.fixed_point(j).u)
}

/// `δ′` for two vectors in `l(V_0)` with `#V_0 = 3`.
///
/// On the unit circle of the mean-zero plane, `(u_i,u)` and `(u_j,u)` are
/// sinusoids; `|·|` of a sinusoid only has local minima at its zeros, so the
/// minimum of the maximum sits where `|(u_i,u)| = |(u_j,u)|`, i.e. `u ⊥ u_i ∓ u_j`.
pub fn separation_constant_of(ui: &[f64], uj: &[f64]) -> Result<f64> {
    if ui.len() != 3 || uj.len() != 3 {
        return Err(Error::InvalidArgument("vectors must have length 3".into()));
    }
    let a = plane_coords(ui);
    let b = plane_coords(uj);
    let cross = a.0 * b.1 - a.1 * b.0;
    if cross.abs() <= 1e-12 * norm2(a) * norm2(b) || norm2(a) == 0.0 || norm2(b) == 0.0 {
        return Err(Error::Degenerate(
            "u_i and u_j are parallel; their span is not the mean-zero plane".into(),
        ));
    }
    let value = |t: (f64, f64)| {
        let x = (a.0 * t.0 + a.1 * t.1).abs();
        let y = (b.0 * t.0 + b.1 * t.1).abs();
        x.max(y)
    };
    let mut best = f64::INFINITY;
    for d in [(a.0 - b.0, a.1 - b.1), (a.0 + b.0, a.1 + b.1)] {
        let n = norm2(d);
        if n > 0.0 {
            best = best.min(value((-d.1 / n, d.0 / n)));
        }
    }
    // the scan can only overshoot the true minimum
    let scan = (0..SCAN_POINTS)
        .map(|s| {
            let th = std::f64::consts::PI * s as f64 / SCAN_POINTS as f64;
            value((th.cos(), th.sin()))
        })
        .fold(f64::INFINITY, f64::min);
    let scale = norm2(a).max(norm2(b));
    if scan < best - 1e-9 * scale || scan > best + 1e-3 * scale {
        return Err(Error::Internal(format!(
            "separation constant {best} disagrees with angular scan {scan}"
        )));
    }
    Ok(best)
}

/// Coordinates of `P u` in the orthonormal basis
/// `(1,−1,0)/√2`, `(1,1,−2)/√6` of the mean-zero plane.
fn plane_coords(u: &[f64]) -> (f64, f64) {
    let p = linalg::project_mean_zero(u);
    (
        (p[0] - p[1]) / 2f64.sqrt(),
        (p[0] + p[1] - 2.0 * p[2]) / 6f64.sqrt(),
    )
}

fn norm2(v: (f64, f64)) -> f64 {
    v.0.hypot(v.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_vectors_are_degenerate() {
        assert!(matches!(
            separation_constant_of(&[-2.0, 1.0, 1.0], &[-4.0, 2.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn homogeneous_and_symmetric() {
        let ui = [-2.0, 1.0, 1.0];
        let uj = [1.0, -2.0, 1.0];
        let d = separation_constant_of(&ui, &uj).unwrap();
        let d_rev = separation_constant_of(&uj, &ui).unwrap();
        assert!((d - d_rev).abs() < 1e-15);
        let scaled = |v: &[f64]| v.iter().map(|x| 2.5 * x).collect::<Vec<_>>();
        let d2 = separation_constant_of(&scaled(&ui), &scaled(&uj)).unwrap();
        assert!((d2 - 2.5 * d).abs() < 1e-12);
    }
}
