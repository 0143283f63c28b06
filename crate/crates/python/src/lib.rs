use pcfdist::harmonic::{separation_constant, BoundaryVector};
use pcfdist::io::{resolve_spec, LoadedSpec};
use pcfdist::measures::{harmonic_measure_table, HarmonicTuple};
use pcfdist::metrics::{
    default_cap, discrete_geodesic, distance_matrix, geodesic_converge, geodesic_profile,
    intrinsic_certificate, intrinsic_estimate, IntrinsicOptions, MetricContext,
};
use pcfdist::structure::VertexRef;
use pcfdist::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidParameter(_)
        | Error::InvalidSpec(_)
        | Error::Parse { .. }
        | Error::Resource { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A fractal with its harmonic structure and a harmonic tuple.
///
/// `spec` is a builtin name (`gasket:2`, `hexagasket`, ...) or a spec file
/// path; `tuple` is a list of boundary vectors, defaulting to an orthonormal
/// basis of the harmonic functions modulo constants. Vertices are written
/// `word:label`, e.g. `"01:2"` or `"-:0"`.
#[pyclass(module = "pcfdist_py", frozen)]
struct Fractal {
    spec: LoadedSpec,
    ctx: MetricContext,
}

impl Fractal {
    fn vertex(&self, text: &str) -> PyResult<VertexRef> {
        let hs = self.ctx.harmonic();
        VertexRef::parse(text, hs.k(), hs.q()).map_err(to_py)
    }
}

#[pymethods]
impl Fractal {
    #[new]
    #[pyo3(signature = (spec = "gasket:2", tuple = None))]
    fn new(spec: &str, tuple: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let loaded = resolve_spec(spec).map_err(to_py)?;
        let hs = loaded.harmonic_structure().map_err(to_py)?;
        let ctx = match tuple {
            Some(t) => {
                let h = HarmonicTuple::new(t.into_iter().map(BoundaryVector).collect(), hs.q())
                    .map_err(to_py)?;
                MetricContext::new(hs, h).map_err(to_py)?
            }
            None => MetricContext::standard(hs),
        };
        Ok(Fractal { spec: loaded, ctx })
    }

    #[getter]
    fn name(&self) -> String {
        self.ctx.harmonic().spec().name.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.ctx.harmonic().weights().to_vec()
    }

    #[getter]
    fn tuple(&self) -> Vec<Vec<f64>> {
        self.ctx.tuple().components().iter().map(|a| a.0.clone()).collect()
    }

    fn vertex_count(&self, level: usize) -> PyResult<usize> {
        Ok(self.ctx.level(level).map_err(to_py)?.graph().vertex_count())
    }

    /// Id of a vertex in `V_level`.
    fn vertex_id(&self, x: &str, level: usize) -> PyResult<u32> {
        self.ctx.vertex_id(&self.vertex(x)?, level).map_err(to_py)
    }

    /// Discrete geodesic distance at one level.
    fn geodesic(&self, x: &str, y: &str, level: usize) -> PyResult<f64> {
        let (x, y) = (self.vertex(x)?, self.vertex(y)?);
        Ok(discrete_geodesic(&self.ctx, &x, &y, level).map_err(to_py)?.value)
    }

    /// `[(n, value)]` for increasing levels.
    #[pyo3(signature = (x, y, n_max, rtol = 0.0))]
    fn geodesic_history(&self, x: &str, y: &str, n_max: usize, rtol: f64) -> PyResult<Vec<(usize, f64)>> {
        let (x, y) = (self.vertex(x)?, self.vertex(y)?);
        Ok(geodesic_converge(&self.ctx, &x, &y, n_max, rtol).map_err(to_py)?.entries)
    }

    /// Distances from `x` to every vertex of `V_level`, by id.
    fn profile(&self, py: Python<'_>, x: &str, level: usize) -> PyResult<Vec<f64>> {
        let x = self.vertex(x)?;
        py.detach(|| geodesic_profile(&self.ctx, &x, level)).map_err(to_py)
    }

    #[pyo3(signature = (sources, level, threads = 1))]
    fn distance_matrix(&self, py: Python<'_>, sources: Vec<u32>, level: usize, threads: usize) -> PyResult<Vec<Vec<f64>>> {
        py.detach(|| distance_matrix(&self.ctx, &sources, level, threads)).map_err(to_py)
    }

    #[pyo3(signature = (x, y, level, cap = None))]
    fn certificate<'py>(
        &self,
        py: Python<'py>,
        x: &str,
        y: &str,
        level: usize,
        cap: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let (x, y) = (self.vertex(x)?, self.vertex(y)?);
        let cap = cap.unwrap_or_else(|| default_cap(self.ctx.harmonic(), self.ctx.tuple()));
        let cert = intrinsic_certificate(&self.ctx, &x, &y, level, cap).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("level", cert.level)?;
        d.set_item("cap", cert.cap)?;
        d.set_item("value", cert.certified_value)?;
        d.set_item("min_slack", cert.slack.min_slack)?;
        d.set_item("feasible", cert.feasible())?;
        Ok(d)
    }

    #[pyo3(signature = (x, y, level, depth = 0, max_iter = 2000, rtol = 1e-4))]
    #[allow(clippy::too_many_arguments)]
    fn intrinsic<'py>(
        &self,
        py: Python<'py>,
        x: &str,
        y: &str,
        level: usize,
        depth: usize,
        max_iter: usize,
        rtol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let (x, y) = (self.vertex(x)?, self.vertex(y)?);
        let opts = IntrinsicOptions {
            extra_depth: depth,
            max_iter,
            rtol,
            cap: None,
        };
        let est = py
            .detach(|| intrinsic_estimate(&self.ctx, &x, &y, level, &opts))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("value", est.value)?;
        d.set_item("upper", est.upper)?;
        d.set_item("certificate_value", est.certificate_value)?;
        d.set_item("iterations", est.iterations)?;
        d.set_item("converged", est.converged)?;
        d.set_item("min_slack", est.min_slack)?;
        d.set_item("history", est.history)?;
        Ok(d)
    }

    /// Harmonic coordinates of `V_level`, one row per vertex id.
    fn embedding(&self, level: usize) -> PyResult<Vec<Vec<f64>>> {
        let lv = self.ctx.level(level).map_err(to_py)?;
        Ok((0..lv.graph().vertex_count() as u32).map(|id| lv.coord(id).to_vec()).collect())
    }

    /// Energy measures of the tuple on the cells of each depth.
    fn cell_measures(&self, depth: usize) -> Vec<Vec<f64>> {
        let t = harmonic_measure_table(self.ctx.harmonic(), self.ctx.tuple(), depth);
        (0..=depth).map(|m| t.level(m).to_vec()).collect()
    }

    fn separation_constant(&self, i: usize, j: usize) -> PyResult<f64> {
        separation_constant(self.ctx.harmonic(), i, j).map_err(to_py)
    }

    fn spec_json(&self) -> String {
        let hs = self.ctx.harmonic();
        LoadedSpec {
            spec: self.spec.spec.clone(),
            d: Some(hs.d().clone()),
            r: Some(hs.weights().to_vec()),
        }
        .to_json()
    }

    fn __repr__(&self) -> String {
        format!("Fractal({:?}, N = {})", self.name(), self.ctx.tuple().len())
    }
}

#[pymodule]
fn pcfdist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Fractal>()?;
    Ok(())
}
