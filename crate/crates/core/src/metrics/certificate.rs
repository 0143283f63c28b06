use nalgebra::DMatrix;

use super::{profile_from, MetricContext};
use crate::error::{Error, Result};
use crate::harmonic::HarmonicStructure;
use crate::io::fmt_f64;
use crate::measures::{check_domination, harmonic_cell_measure, HarmonicTuple, SlackTable};
use crate::structure::{VertexRef, Word};

/// A feasible function for the intrinsic-distance supremum: the capped
/// geodesic profile `min(φ_n, M)` on `V_n`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub level: usize,
    pub cap: f64,
    pub f: Vec<f64>,
    pub slack: SlackTable,
    /// `f(y) − f(x) = min(ρ̂^(n)(x, y), M)`.
    pub certified_value: f64,
}

impl Certificate {
    pub fn feasible(&self) -> bool {
        self.slack.feasible
    }

    pub fn to_json(&self) -> String {
        format!(
            "{{\n  \"level\": {},\n  \"cap\": {},\n  \"value\": {},\n  \"min_slack\": {},\n  \"feasible\": {}\n}}\n",
            self.level,
            fmt_f64(self.cap),
            fmt_f64(self.certified_value),
            fmt_f64(self.slack.min_slack),
            self.feasible()
        )
    }
}

/// Largest effective resistance between two boundary points for `E^(0)`.
pub fn max_boundary_resistance(hs: &HarmonicStructure) -> f64 {
    let q = hs.q();
    let l: DMatrix<f64> = -hs.d().matrix();
    // grounding p_0 makes the Laplacian invertible
    let g = l.view((1, 1), (q - 1, q - 1)).into_owned();
    let inv = g.try_inverse().expect("D has a one-dimensional kernel");
    let entry = |a: usize, b: usize| {
        if a == 0 || b == 0 {
            0.0
        } else {
            inv[(a - 1, b - 1)]
        }
    };
    let mut best: f64 = 0.0;
    for a in 0..q {
        for b in a + 1..q {
            best = best.max(entry(a, a) + entry(b, b) - 2.0 * entry(a, b));
        }
    }
    best
}

/// `M = 2·√(c·μ_⟨h⟩(K)/2)` with `c` the largest boundary resistance; a
/// heuristic for a cap that never binds between nearby points.
pub fn default_cap(hs: &HarmonicStructure, h: &HarmonicTuple) -> f64 {
    let c = max_boundary_resistance(hs);
    let total = harmonic_cell_measure(hs, h, &Word::empty());
    2.0 * (c * total / 2.0).sqrt()
}

pub fn intrinsic_certificate(
    ctx: &MetricContext,
    x: &VertexRef,
    y: &VertexRef,
    n: usize,
    cap: f64,
) -> Result<Certificate> {
    if !(cap >= 0.0) {
        return Err(Error::InvalidArgument(format!("cap must be >= 0, got {cap}")));
    }
    let level = ctx.level(n)?;
    let (sx, sy) = (ctx.vertex_id(x, n)?, ctx.vertex_id(y, n)?);
    let phi = profile_from(&level, sx)?;
    let f: Vec<f64> = phi.iter().map(|&p| p.min(cap)).collect();
    let slack = check_domination(ctx.harmonic(), level.graph(), &f, ctx.tuple(), n)?;
    let certified_value = f[sy as usize] - f[sx as usize];
    Ok(Certificate {
        level: n,
        cap,
        f,
        slack,
        certified_value,
    })
}
