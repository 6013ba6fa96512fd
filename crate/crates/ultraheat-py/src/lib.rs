//! Python bindings for the p-adic graph diffusion library.
//!
//! The module exposes the time-dependent graph, functions on the state
//! space, the Cauchy-problem solvers, boundary eigenvalue reports and the
//! Monte-Carlo validator. See `python/smoke_test.py` for a tour.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ultraheat_core::boundary::{self, MeasureNormalization, QuotientEdgeSet, Region};
use ultraheat_core::evolve::{self, Method};
use ultraheat_core::expr::Expr;
use ultraheat_core::l2::{CellVector, L2Function};
use ultraheat_core::ops;
use ultraheat_core::padic::Embedding;
use ultraheat_core::quad::QuadratureConfig;
use ultraheat_core::scenario::parse_point;
use ultraheat_core::stochastic;

fn to_py(e: ultraheat_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mat_rows(m: &ultraheat_core::linalg::Mat) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

fn parse_edge_set(name: &str) -> PyResult<QuotientEdgeSet> {
    match name {
        "boundary_only" => Ok(QuotientEdgeSet::BoundaryOnly),
        "omega_star" => Ok(QuotientEdgeSet::OmegaStar),
        other => Err(PyValueError::new_err(format!(
            "unknown edge set '{other}' (use boundary_only or omega_star)"
        ))),
    }
}

fn parse_normalization(name: &str) -> PyResult<MeasureNormalization> {
    match name {
        "unit-ball" => Ok(MeasureNormalization::UnitBall),
        "haar" => Ok(MeasureNormalization::Haar),
        other => Err(PyValueError::new_err(format!(
            "unknown normalization '{other}' (use unit-ball or haar)"
        ))),
    }
}

/// Evaluates a weight expression at a time.
#[pyfunction]
fn eval_expr(src: &str, t: f64) -> PyResult<f64> {
    Expr::parse(src).map_err(to_py)?.eval(t).map_err(to_py)
}

/// Parses a weight expression and returns its canonical printed form.
#[pyfunction]
fn parse_expr(src: &str) -> PyResult<String> {
    Ok(Expr::parse(src).map_err(to_py)?.to_string())
}

/// A finite graph with time-dependent edge weights, embedded into disjoint
/// p-adic balls.
#[pyclass]
struct TimeGraph {
    inner: ultraheat_core::graph::TimeGraph,
    window: (f64, f64),
}

#[pymethods]
impl TimeGraph {
    /// weights: list of (i, j, expression) with i < j. The window is used to
    /// validate weight nonnegativity and as the default run interval.
    #[new]
    #[pyo3(signature = (prime, vertices, weights, window, level=None, precision=32))]
    fn new(
        prime: u64,
        vertices: usize,
        weights: Vec<(usize, usize, String)>,
        window: (f64, f64),
        level: Option<i32>,
        precision: i32,
    ) -> PyResult<Self> {
        let embedding = Embedding::new(vertices, prime, level, precision).map_err(to_py)?;
        let parsed: Vec<(usize, usize, Expr)> = weights
            .into_iter()
            .map(|(i, j, src)| Ok((i, j, Expr::parse(&src).map_err(to_py)?)))
            .collect::<PyResult<_>>()?;
        let inner =
            ultraheat_core::graph::TimeGraph::new(embedding, parsed, window).map_err(to_py)?;
        Ok(TimeGraph { inner, window })
    }

    #[getter]
    fn prime(&self) -> u64 {
        self.inner.embedding().prime()
    }

    #[getter]
    fn vertices(&self) -> usize {
        self.inner.embedding().vertices()
    }

    #[getter]
    fn level(&self) -> i32 {
        self.inner.embedding().level()
    }

    #[getter]
    fn window(&self) -> (f64, f64) {
        self.window
    }

    /// (adjacency, degrees, laplacian) at time t.
    fn snapshot(&self, t: f64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
        let s = self.inner.snapshot(t).map_err(to_py)?;
        Ok((mat_rows(&s.adjacency), s.gamma, mat_rows(&s.laplacian)))
    }

    /// Ascending eigenvalues of the Laplacian matrix and the orthogonal
    /// modal matrix (rows of the returned list are matrix rows).
    fn spectrum(&self, t: f64) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let frame = ops::spectral_frame(&self.inner, t, None).map_err(to_py)?;
        Ok((frame.eigenvalues, mat_rows(&frame.modal)))
    }

    fn continuity_modulus(&self, s: f64, t: f64) -> PyResult<f64> {
        self.inner.continuity_modulus(s, t).map_err(to_py)
    }

    fn commutation_defect(&self, grid: Vec<f64>) -> PyResult<f64> {
        self.inner.commutation_defect(&grid).map_err(to_py)
    }

    /// Runs one solver. method: autonomous | closed | trotter | commuting.
    #[pyo3(signature = (method, s, t, u0, steps=64, quad_k=64))]
    fn evolve(
        &self,
        py: Python<'_>,
        method: &str,
        s: f64,
        t: f64,
        u0: &Function,
        steps: usize,
        quad_k: usize,
    ) -> PyResult<(Function, Py<PyDict>)> {
        let quad = QuadratureConfig::new(quad_k).map_err(to_py)?;
        let method = match method {
            "autonomous" => Method::Autonomous,
            "closed" => Method::ClosedForm,
            "trotter" => Method::Trotter(steps),
            "commuting" => Method::Commuting,
            other => {
                return Err(PyValueError::new_err(format!("unknown method '{other}'")));
            }
        };
        let report =
            evolve::run_method(&self.inner, method, s, t, &u0.inner, &quad).map_err(to_py)?;
        let diag = PyDict::new(py);
        diag.set_item("method", &report.method)?;
        if let Some(defect) = report.commutation_defect {
            diag.set_item("commutation_defect", defect)?;
        }
        diag.set_item("degenerate_matching", report.degenerate_matching)?;
        if let Some(k) = report.quad_subintervals {
            diag.set_item("quad_k", k)?;
        }
        Ok((
            Function {
                inner: report.result,
            },
            diag.into(),
        ))
    }

    /// L² distance between the closed form and a Trotter product.
    #[pyo3(signature = (s, t, u0, steps=1024, quad_k=64))]
    fn closed_vs_trotter_gap(
        &self,
        s: f64,
        t: f64,
        u0: &Function,
        steps: usize,
        quad_k: usize,
    ) -> PyResult<f64> {
        let quad = QuadratureConfig::new(quad_k).map_err(to_py)?;
        evolve::closed_vs_trotter_gap(&self.inner, s, t, &u0.inner, &quad, steps).map_err(to_py)
    }

    /// Analytic ball occupation probabilities for a walker started at
    /// `start` (syntax `vertex[:digits]`).
    #[pyo3(signature = (s, t, start, quad_k=64))]
    fn heat_kernel(&self, s: f64, t: f64, start: &str, quad_k: usize) -> PyResult<Vec<f64>> {
        let quad = QuadratureConfig::new(quad_k).map_err(to_py)?;
        let x0 = parse_point(self.inner.embedding(), start).map_err(to_py)?;
        stochastic::heat_kernel_ball_probs(&self.inner, s, &x0, t, &quad).map_err(to_py)
    }

    /// `exp(-int_s^t gamma_I)` for one vertex.
    #[pyo3(signature = (s, t, vertex, quad_k=64))]
    fn survival_probability(&self, s: f64, t: f64, vertex: usize, quad_k: usize) -> PyResult<f64> {
        let quad = QuadratureConfig::new(quad_k).map_err(to_py)?;
        stochastic::survival_probability(&self.inner, s, t, vertex, &quad).map_err(to_py)
    }

    /// Monte-Carlo validation of the jump process against the analytic
    /// kernel; returns a dict of marginals and distances.
    #[pyo3(signature = (s, t, start, paths, seed, quad_k=64))]
    fn simulate(
        &self,
        py: Python<'_>,
        s: f64,
        t: f64,
        start: &str,
        paths: usize,
        seed: u64,
        quad_k: usize,
    ) -> PyResult<Py<PyDict>> {
        let quad = QuadratureConfig::new(quad_k).map_err(to_py)?;
        let x0 = parse_point(self.inner.embedding(), start).map_err(to_py)?;
        let cmp = stochastic::validate_markov(&self.inner, s, t, &x0, paths, seed, &quad)
            .map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("occupancy", cmp.estimate.ball_probabilities)?;
        out.set_item("analytic", cmp.analytic)?;
        out.set_item("standard_errors", cmp.estimate.standard_errors)?;
        out.set_item("survival_atom", cmp.estimate.survival_atom)?;
        out.set_item("survival_expected", cmp.survival_expected)?;
        out.set_item("survival_sigma", cmp.survival_sigma)?;
        out.set_item("tv_distance", cmp.tv_distance)?;
        out.set_item("chapman_kolmogorov_tv", cmp.chapman_kolmogorov_tv)?;
        out.set_item("paths", cmp.estimate.paths)?;
        Ok(out.into())
    }

    /// Boundary-degree ratio of a region (`vertex[:digits]` entries).
    #[pyo3(signature = (region, t, normalization="unit-ball"))]
    fn gamma_hat(&self, region: Vec<String>, t: f64, normalization: &str) -> PyResult<f64> {
        let region = Region::parse(*self.inner.embedding(), &region).map_err(to_py)?;
        boundary::gamma_hat(&self.inner, &region, t, parse_normalization(normalization)?)
            .map_err(to_py)
    }

    /// Full boundary eigenvalue report as a dict.
    #[pyo3(signature = (region, t, resolution, edge_set="boundary_only", normalization="unit-ball"))]
    fn boundary_report(
        &self,
        py: Python<'_>,
        region: Vec<String>,
        t: f64,
        resolution: i32,
        edge_set: &str,
        normalization: &str,
    ) -> PyResult<Py<PyDict>> {
        let region = Region::parse(*self.inner.embedding(), &region).map_err(to_py)?;
        let report = boundary::bound_report(
            &self.inner,
            &region,
            t,
            resolution,
            parse_edge_set(edge_set)?,
            parse_normalization(normalization)?,
        )
        .map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("t", report.t)?;
        out.set_item("resolution", report.resolution)?;
        out.set_item("dirichlet", report.dirichlet)?;
        out.set_item("vonneumann", report.vonneumann)?;
        out.set_item("graph_dirichlet", report.graph_dirichlet)?;
        out.set_item("graph_vonneumann", report.graph_vonneumann)?;
        out.set_item("gamma_hat", report.gamma_hat)?;
        out.set_item("dirichlet_le_min", report.dirichlet_le_min)?;
        out.set_item("dirichlet_le_one", report.dirichlet_le_one)?;
        out.set_item("vonneumann_le_min", report.vonneumann_le_min)?;
        out.set_item(
            "gamma_hat_lt_graph_dirichlet",
            report.gamma_hat_lt_graph_dirichlet,
        )?;
        out.set_item(
            "vonneumann_lt_graph_vonneumann",
            report.vonneumann_lt_graph_vonneumann,
        )?;
        Ok(out.into())
    }
}

/// An element of the finite working subspace of L²(K_N).
#[pyclass]
struct Function {
    inner: L2Function,
}

#[pymethods]
impl Function {
    /// The indicator of one vertex ball.
    #[staticmethod]
    fn ball_indicator(graph: &TimeGraph, resolution: i32, vertex: usize) -> PyResult<Self> {
        L2Function::ball_indicator(*graph.inner.embedding(), resolution, vertex)
            .map(|inner| Function { inner })
            .map_err(to_py)
    }

    /// The constant function one.
    #[staticmethod]
    fn constant_one(graph: &TimeGraph, resolution: i32) -> PyResult<Self> {
        Ok(Function {
            inner: L2Function::constant_one(*graph.inner.embedding(), resolution),
        })
    }

    /// Builds a function from its resolution-R cell values
    /// (vertex-major, ascending sub-ball offset).
    #[staticmethod]
    fn from_cells(graph: &TimeGraph, resolution: i32, values: Vec<Complex64>) -> PyResult<Self> {
        let cells = CellVector::new(*graph.inner.embedding(), resolution, values).map_err(to_py)?;
        Ok(Function {
            inner: L2Function::from_cells(&cells),
        })
    }

    #[getter]
    fn resolution(&self) -> i32 {
        self.inner.resolution()
    }

    fn vertex_values(&self) -> Vec<Complex64> {
        self.inner.vertex_values().to_vec()
    }

    fn cells(&self) -> Vec<Complex64> {
        self.inner.to_cells().values().to_vec()
    }

    fn integral(&self) -> Complex64 {
        self.inner.integral()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn distance(&self, other: &Function) -> f64 {
        self.inner.distance(&other.inner)
    }

    /// CSV serialization (vertex rows then wavelet coefficient rows).
    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

#[pymodule]
fn ultraheat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TimeGraph>()?;
    m.add_class::<Function>()?;
    m.add_function(wrap_pyfunction!(eval_expr, m)?)?;
    m.add_function(wrap_pyfunction!(parse_expr, m)?)?;
    Ok(())
}
