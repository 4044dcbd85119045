use std::path::PathBuf;

use dichotomy_core::bounds::BoundFamily as CoreBounds;
use dichotomy_core::certificate::{check_global_gate, check_local_gate, GateResult};
use dichotomy_core::cocycle::Cocycle as CoreCocycle;
use dichotomy_core::manifold::ManifoldSequence;
use dichotomy_core::scenario::commands::{
    cmd_certify, cmd_solve, cmd_verify, load_manifold, CommandOutput,
};
use dichotomy_core::scenario::{Overrides, Scenario as CoreScenario, ScenarioError};
use dichotomy_core::sequence::Sequence;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scenario_err(e: ScenarioError) -> PyErr {
    match e {
        ScenarioError::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(
    m: &impl std::ops::Index<(usize, usize), Output = f64>,
    nrows: usize,
    ncols: usize,
) -> Vec<Vec<f64>> {
    (0..nrows)
        .map(|i| (0..ncols).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Block-diagonal linear cocycle `A_n = A_n^E ⊕ A_n^F`.
#[pyclass(module = "dichotomy", frozen)]
struct Cocycle {
    inner: CoreCocycle,
}

#[pymethods]
impl Cocycle {
    /// Constant diagonal cocycle.
    #[staticmethod]
    fn diagonal(stable: Vec<f64>, unstable: Vec<f64>, horizon: usize) -> PyResult<Self> {
        let s: Vec<Sequence> = stable.into_iter().map(Sequence::constant).collect();
        let u: Vec<Sequence> = unstable.into_iter().map(Sequence::constant).collect();
        let inner = CoreCocycle::diagonal(&s, &u, horizon).map_err(value_err)?;
        Ok(Cocycle { inner })
    }

    /// `A_n = diag(factor^{(-1)^n}, unstable)`.
    #[staticmethod]
    fn alternating(factor: f64, unstable: f64, horizon: usize) -> PyResult<Self> {
        let inner = CoreCocycle::alternating(factor, unstable, horizon).map_err(value_err)?;
        Ok(Cocycle { inner })
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        (self.inner.stable_dim(), self.inner.unstable_dim())
    }

    /// Stable and unstable blocks of `𝒜_{m,n}` as nested lists.
    fn transition(&self, m: usize, n: usize) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let t = self
            .inner
            .transition(m, n)
            .map_err(|e| PyIndexError::new_err(e.to_string()))?;
        Ok((
            rows(&t.stable, t.stable.nrows(), t.stable.ncols()),
            rows(&t.unstable, t.unstable.nrows(), t.unstable.ncols()),
        ))
    }

    /// `(𝒜_{m,n}|_F)^{-1}` as a nested list.
    fn inverse_on_unstable(&self, m: usize, n: usize) -> PyResult<Vec<Vec<f64>>> {
        let t = self
            .inner
            .inverse_on_unstable(m, n)
            .map_err(|e| PyIndexError::new_err(e.to_string()))?;
        Ok(rows(&t, t.nrows(), t.ncols()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Cocycle(stable_dim={}, unstable_dim={}, horizon={})",
            self.inner.stable_dim(),
            self.inner.unstable_dim(),
            self.inner.horizon()
        )
    }
}

/// Dichotomy bound pair `a(m, n)`, `b(m, n)`.
#[pyclass(module = "dichotomy", frozen)]
struct BoundFamily {
    inner: CoreBounds,
}

#[pymethods]
impl BoundFamily {
    #[staticmethod]
    #[pyo3(signature = (scale, stable_rate, unstable_rate, nonuniformity=0.0))]
    fn exponential(scale: f64, stable_rate: f64, unstable_rate: f64, nonuniformity: f64) -> Self {
        BoundFamily {
            inner: CoreBounds::exponential(scale, stable_rate, unstable_rate, nonuniformity),
        }
    }

    /// Builds a family from its JSON form, e.g. `{"kind": "exponential", ...}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(value_err)?;
        Ok(BoundFamily { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("bounds serialise")
    }

    fn bound_a(&self, m: usize, n: usize) -> PyResult<f64> {
        self.inner.bound_a(m, n).map_err(value_err)
    }

    fn bound_b(&self, m: usize, n: usize) -> PyResult<f64> {
        self.inner.bound_b(m, n).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("BoundFamily({})", self.to_json())
    }
}

/// Solved graph sequence read back from `manifold.json`.
#[pyclass(module = "dichotomy", frozen)]
struct Manifold {
    inner: ManifoldSequence,
}

#[pymethods]
impl Manifold {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Manifold {
            inner: load_manifold(&path).map_err(scenario_err)?,
        })
    }

    #[getter]
    fn last_time(&self) -> usize {
        self.inner.last_time()
    }

    /// `φ_n(ξ)` by multilinear interpolation.
    fn eval(&self, n: usize, xi: Vec<f64>) -> PyResult<Vec<f64>> {
        let v = self.inner.eval(n, &xi).map_err(value_err)?;
        Ok(v.iter().copied().collect())
    }

    fn max_lipschitz(&self) -> f64 {
        self.inner.max_discrete_lipschitz()
    }

    fn max_abs_at_origin(&self) -> f64 {
        self.inner.max_abs_at_origin()
    }

    fn sup_difference(&self, other: &Manifold) -> PyResult<f64> {
        self.inner.sup_difference(&other.inner).map_err(value_err)
    }
}

/// Scenario configuration; the run methods return the report as a dict.
#[pyclass(module = "dichotomy", frozen)]
struct Scenario {
    inner: CoreScenario,
}

type RunFn = fn(&dichotomy_core::scenario::Resolved) -> Result<CommandOutput, ScenarioError>;

impl Scenario {
    fn run<'py>(
        &self,
        py: Python<'py>,
        command: RunFn,
        out: Option<PathBuf>,
        horizon: Option<usize>,
        seed: Option<u64>,
        force: bool,
        local: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let overrides = Overrides {
            horizon,
            seed,
            force,
            local,
            out,
        };
        let resolved = self
            .inner
            .clone()
            .apply(&overrides)
            .and_then(CoreScenario::resolve)
            .map_err(scenario_err)?;
        let output = py.detach(|| command(&resolved)).map_err(scenario_err)?;
        let text = serde_json::to_string(&output.report).expect("report serialises");
        from_json(py, &text)
    }
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Self::load(PathBuf::from(format!("preset:{name}")))
    }

    /// Loads a TOML file or `preset:<name>`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Scenario {
            inner: CoreScenario::load(&path).map_err(scenario_err)?,
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Scenario {
            inner: CoreScenario::from_toml_str(text, "<string>").map_err(scenario_err)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn bounds(&self) -> BoundFamily {
        BoundFamily {
            inner: self.inner.bounds.clone(),
        }
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    #[pyo3(signature = (out=None, horizon=None, seed=None, force=false, local=false))]
    fn certify<'py>(
        &self,
        py: Python<'py>,
        out: Option<PathBuf>,
        horizon: Option<usize>,
        seed: Option<u64>,
        force: bool,
        local: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        self.run(py, cmd_certify, out, horizon, seed, force, local)
    }

    #[pyo3(signature = (out=None, horizon=None, seed=None, force=false, local=false))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        out: Option<PathBuf>,
        horizon: Option<usize>,
        seed: Option<u64>,
        force: bool,
        local: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        self.run(py, cmd_solve, out, horizon, seed, force, local)
    }

    #[pyo3(signature = (out=None, horizon=None, seed=None, force=false, local=false))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        out: Option<PathBuf>,
        horizon: Option<usize>,
        seed: Option<u64>,
        force: bool,
        local: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        self.run(
            py,
            |r| cmd_verify(r, None),
            out,
            horizon,
            seed,
            force,
            local,
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, horizon={})",
            self.inner.name, self.inner.horizon
        )
    }
}

fn gate_dict<'py>(py: Python<'py>, g: GateResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", g.value)?;
    d.set_item("margin", g.margin)?;
    d.set_item("passed", g.passed)?;
    Ok(d)
}

/// `2α + max{2β, √β} < 1`.
#[pyfunction]
fn gate_global(py: Python<'_>, alpha: f64, beta: f64) -> PyResult<Bound<'_, PyDict>> {
    gate_dict(py, check_global_gate(alpha, beta))
}

/// `4α + max{4β, √(2β)} < 1`.
#[pyfunction]
fn gate_local(py: Python<'_>, alpha: f64, beta: f64) -> PyResult<Bound<'_, PyDict>> {
    gate_dict(py, check_local_gate(alpha, beta))
}

#[pymodule]
fn dichotomy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Cocycle>()?;
    m.add_class::<BoundFamily>()?;
    m.add_class::<Manifold>()?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(gate_global, m)?)?;
    m.add_function(wrap_pyfunction!(gate_local, m)?)?;
    m.add(
        "PRESETS",
        dichotomy_core::scenario::presets::PRESETS.to_vec(),
    )?;
    Ok(())
}
