//! Intrinsic and geodesic distances on post-critically finite self-similar
//! sets carrying a regular harmonic structure.
//!
//! The crate is organised bottom-up:
//!
//! * [`structure`] describes the self-similar structure combinatorially and
//!   builds the vertex hierarchy `V_0 ⊂ V_1 ⊂ …` with glued addresses.
//! * [`harmonic`] holds the pair `(D, r)`, assembles the discrete energies,
//!   computes the harmonic extension matrices and fixed-point eigendata and
//!   checks the structural conditions.
//! * [`measures`] evaluates energy measures of harmonic and piecewise
//!   harmonic functions on cells and builds domination slack tables.
//! * [`metrics`] computes discrete geodesic distances over the harmonic
//!   embedding, their convergence, and intrinsic-distance certificates and
//!   estimates.
//! * [`cli`] and [`io`] provide spec loading and deterministic file output.

pub mod cli;
pub mod error;
pub mod harmonic;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod metrics;
pub mod structure;

pub use error::{Error, Result};
pub use harmonic::{BoundaryVector, ConditionReport, DirichletMatrix, HarmonicStructure};
pub use measures::{CellMeasureTable, HarmonicTuple, SlackTable};
pub use metrics::{Certificate, ConvergenceHistory, GeodesicResult, MetricContext};
pub use structure::{FractalSpec, GlueRule, LevelGraph, VertexRef, Word};
