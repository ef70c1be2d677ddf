//! Python bindings: `physarum_py.Instance` plus the named generators.

use std::fmt::Display;

use num_rational::BigRational;
use num_traits::One;
use physarum_core::domination::DualVertexSet;
use physarum_core::dynamics::{ContinuousConfig, Integrator, Schedule};
use physarum_core::instances::{generate, shortest_path as sp_instance, GeneratorSpec, RandomLpSpec};
use physarum_core::invariants::{check_instance, CheckOptions};
use physarum_core::linalg::{f64_to_rational, rational_to_f64};
use physarum_core::model::{check_start, parse_instance};
use physarum_core::{
    compute_constants, enumerate_bfs, enumerate_dual_vertices, integrate_continuous, plan_steps, precondition,
    run, step_directed, step_undirected, CapacityState, EnergySolver, LpInstance, Mode, RunConfig,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn invalid(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn failed(e: impl Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "directed" => Ok(Mode::Directed),
        "undirected" => Ok(Mode::Undirected),
        other => Err(invalid(format!("unknown mode {other:?}"))),
    }
}

fn json_loads<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

/// A validated LP `min c^T x, Ax = b` with an optional starting point.
#[pyclass(name = "Instance", module = "physarum_py", frozen)]
struct PyInstance {
    inner: LpInstance,
    x0: Option<Vec<f64>>,
}

impl PyInstance {
    fn start(&self, x0: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = x0.or_else(|| self.x0.clone()).unwrap_or_else(|| vec![1.0; self.inner.m()]);
        check_start(&x, self.inner.m()).map_err(invalid)?;
        Ok(x)
    }

    fn solver(&self) -> PyResult<EnergySolver> {
        EnergySolver::new(&self.inner).map_err(invalid)
    }

    fn dual(&self) -> PyResult<DualVertexSet> {
        enumerate_dual_vertices(&self.inner, self.inner.mode()).map_err(failed)
    }
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (a, b, c, mode = "directed", x0 = None))]
    fn new(a: Vec<Vec<i64>>, b: Vec<i64>, c: Vec<i64>, mode: &str, x0: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = LpInstance::new(a, b, c, parse_mode(mode)?).map_err(invalid)?;
        if let Some(x) = &x0 {
            check_start(x, inner.m()).map_err(invalid)?;
        }
        Ok(PyInstance { inner, x0 })
    }

    /// Parses the JSON instance format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, x0) = parse_instance(text).map_err(invalid)?;
        Ok(PyInstance { inner, x0 })
    }

    fn to_json(&self) -> String {
        self.inner.to_json(self.x0.clone())
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<i64>> {
        self.inner.a().to_rows()
    }

    #[getter]
    fn b(&self) -> Vec<i64> {
        self.inner.b().to_vec()
    }

    #[getter]
    fn c(&self) -> Vec<i64> {
        self.inner.c().to_vec()
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode().to_string()
    }

    #[getter]
    fn x0(&self) -> Option<Vec<f64>> {
        self.x0.clone()
    }

    #[getter]
    fn dropped_rows(&self) -> Vec<usize> {
        self.inner.dropped_rows().to_vec()
    }

    /// Exact constants as fraction strings.
    #[pyo3(signature = (x0 = None))]
    fn constants<'py>(&self, py: Python<'py>, x0: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
        let k = compute_constants(&self.inner, &self.start(x0)?).map_err(failed)?;
        json_loads(py, &k.to_json())
    }

    /// Brute-force `opt`, `phi` and the optimal basic solutions.
    fn oracle<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_loads(py, &enumerate_bfs(&self.inner).map_err(failed)?.to_json())
    }

    /// Returns `(q, p, energy)` at capacities `x`.
    fn min_energy(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
        let sol = self.solver()?.solve(&x).map_err(failed)?;
        Ok((sol.q, sol.p, sol.energy))
    }

    /// One discrete step in the instance's mode.
    fn step(&self, x: Vec<f64>, h: f64) -> PyResult<Vec<f64>> {
        let solver = self.solver()?;
        let state = CapacityState::new(x);
        let next = match self.inner.mode() {
            Mode::Directed => step_directed(&solver, &state, h),
            Mode::Undirected => step_undirected(&solver, &state, h),
        };
        Ok(next.map_err(failed)?.x)
    }

    /// Domination level `alpha(x)`.
    fn alpha(&self, x: Vec<f64>) -> PyResult<f64> {
        let xr: Vec<BigRational> = x.iter().map(|&v| f64_to_rational(v)).collect();
        Ok(rational_to_f64(&self.dual()?.alpha_exact(&xr).0))
    }

    /// Runs the discrete dynamics; `h=None` uses the step plan with the
    /// oracle's `Phi/opt`.
    #[pyo3(signature = (x0 = None, h = None, eps = 1e-3, max_iters = 1_000_000, use_oracle = true))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        x0: Option<Vec<f64>>,
        h: Option<f64>,
        eps: f64,
        max_iters: u64,
        use_oracle: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let x0 = self.start(x0)?;
        let solver = self.solver()?;
        let report = if use_oracle { Some(enumerate_bfs(&self.inner).map_err(failed)?) } else { None };
        let dual = self.dual().ok();
        let schedule = match h {
            Some(h) => Schedule::Constant(h),
            None => {
                let consts = compute_constants(&self.inner, &x0).map_err(failed)?;
                let alpha0 = match &dual {
                    Some(d) => d.alpha_exact(&x0.iter().map(|&v| f64_to_rational(v)).collect::<Vec<_>>()).0,
                    None => BigRational::one(),
                };
                let ratio = report.as_ref().and_then(|r| r.phi_over_opt());
                let phi = report.as_ref().and_then(|r| r.phi.clone());
                Schedule::Plan(plan_steps(&consts, &x0, &alpha0, ratio.as_ref(), phi.as_ref(), eps).map_err(failed)?)
            }
        };
        let mut cfg = RunConfig::new(self.inner.mode(), schedule, eps, max_iters);
        cfg.trace_stride = 0;
        cfg.oracle = report.as_ref();
        cfg.dual = dual.as_ref();
        let out = run(&self.inner, &solver, &x0, &cfg).map_err(failed)?;
        let d = PyDict::new(py);
        d.set_item("verdict", out.verdict.to_string())?;
        d.set_item("iterations", out.state.iter)?;
        d.set_item("cost", out.last.cost)?;
        d.set_item("residual_inf", out.last.residual_inf)?;
        d.set_item("dist_inf", out.last.dist_inf)?;
        d.set_item("x", out.state.x)?;
        Ok(d)
    }

    /// Integrates `x' = |q| - x` and returns `x(t_end)`.
    #[pyo3(signature = (x0 = None, t_end = 30.0, dt = 1e-3, method = "rk4"))]
    fn integrate(&self, x0: Option<Vec<f64>>, t_end: f64, dt: f64, method: &str) -> PyResult<Vec<f64>> {
        let x0 = self.start(x0)?;
        let mut cfg = ContinuousConfig::new(t_end, dt);
        cfg.method = method.parse::<Integrator>().map_err(invalid)?;
        cfg.sample_stride = 0;
        let inst = self.inner.with_mode(Mode::Undirected);
        let out = integrate_continuous(&inst, &self.solver()?, &x0, &cfg).map_err(failed)?;
        Ok(out.x)
    }

    /// The instance extended by the column `b`, with its dominating start.
    #[pyo3(signature = (x0 = None))]
    fn precondition(&self, x0: Option<Vec<f64>>) -> PyResult<PyInstance> {
        let pre = precondition(&self.inner, &self.start(x0)?).map_err(failed)?;
        Ok(PyInstance { inner: pre.instance, x0: Some(pre.x0) })
    }

    /// Runs the invariant suites; returns `{"passed": ..., "checks": [...]}`.
    #[pyo3(signature = (x0 = None, seed = 0))]
    fn check<'py>(&self, py: Python<'py>, x0: Option<Vec<f64>>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let opts = CheckOptions { x0: Some(self.start(x0)?), seed, ..CheckOptions::default() };
        json_loads(py, &check_instance(&self.inner, &opts).to_json())
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, m={}, mode={})", self.inner.n(), self.inner.m(), self.inner.mode())
    }
}

fn generated(spec: GeneratorSpec) -> PyResult<PyInstance> {
    let g = generate(&spec).map_err(invalid)?;
    Ok(PyInstance { inner: g.instance, x0: g.x0 })
}

/// Shortest path on s->a, a->t, s->t with costs 1, 1, 3.
#[pyfunction]
fn triangle() -> PyResult<PyInstance> {
    generated(GeneratorSpec::Triangle)
}

/// The triangle with a free direct edge.
#[pyfunction]
fn zero_cost_demo() -> PyResult<PyInstance> {
    generated(GeneratorSpec::ZeroCostDemo)
}

/// Two parallel columns with costs `opt` and `opt + phi`.
#[pyfunction]
#[pyo3(signature = (opt = 1, phi = 1))]
fn thm_one(opt: i64, phi: i64) -> PyResult<PyInstance> {
    generated(GeneratorSpec::ThmOne { opt, phi })
}

/// Seeded random feasible LP.
#[pyfunction]
#[pyo3(signature = (n, m, seed = 0, mode = "directed", unique_optimum = false))]
fn random_lp(n: usize, m: usize, seed: u64, mode: &str, unique_optimum: bool) -> PyResult<PyInstance> {
    let mut spec = RandomLpSpec::new(n, m, seed);
    spec.mode = parse_mode(mode)?;
    spec.unique_optimum = unique_optimum;
    generated(GeneratorSpec::RandomPositiveLp(spec))
}

/// Unit-demand shortest path on `(tail, head, cost)` edges.
#[pyfunction]
#[pyo3(signature = (nodes, edges, source, sink, mode = "directed"))]
fn shortest_path(nodes: usize, edges: Vec<(usize, usize, i64)>, source: usize, sink: usize, mode: &str) -> PyResult<PyInstance> {
    let inner = sp_instance(nodes, &edges, source, sink, parse_mode(mode)?).map_err(invalid)?;
    Ok(PyInstance { inner, x0: None })
}

#[pymodule]
fn physarum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(triangle, m)?)?;
    m.add_function(wrap_pyfunction!(zero_cost_demo, m)?)?;
    m.add_function(wrap_pyfunction!(thm_one, m)?)?;
    m.add_function(wrap_pyfunction!(random_lp, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_path, m)?)?;
    Ok(())
}
