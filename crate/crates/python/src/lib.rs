//! Python bindings for the qudit bandit tomography library.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use qudit_bandit::engine::{self, Preset, RunConfig};
use qudit_bandit::environment;
use qudit_bandit::experiment::{batch, config};
use qudit_bandit::geometry;

fn to_py_err(e: qudit_bandit::Error) -> PyErr {
    match e {
        qudit_bandit::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(json_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, json_to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn parse_preset(name: &str) -> PyResult<Preset> {
    match name {
        "paper" => Ok(Preset::Paper),
        "practical" => Ok(Preset::Practical),
        other => Err(PyValueError::new_err(format!("unknown preset `{other}` (expected paper or practical)"))),
    }
}

fn canonical_overrides(raw: Option<BTreeMap<String, f64>>) -> PyResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (k, v) in raw.unwrap_or_default() {
        let key = config::canonical_override_key(&k)
            .ok_or_else(|| PyValueError::new_err(format!("override `{k}`: unknown key")))?;
        out.insert(key.to_string(), v);
    }
    Ok(out)
}

/// Unit vector in C^d, compared up to global phase.
#[pyclass(name = "PureState", module = "qudit_bandit", frozen, from_py_object)]
#[derive(Clone)]
struct PyPureState {
    inner: geometry::PureState,
}

#[pymethods]
impl PyPureState {
    /// Builds a state from amplitudes; set `normalize` to rescale them first.
    #[new]
    #[pyo3(signature = (amplitudes, normalize = false))]
    fn new(amplitudes: Vec<Complex64>, normalize: bool) -> PyResult<Self> {
        let inner = if normalize {
            geometry::PureState::normalized(amplitudes)
        } else {
            geometry::PureState::new(amplitudes)
        };
        inner.map(|inner| PyPureState { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn basis(d: usize, k: usize) -> PyResult<Self> {
        geometry::PureState::basis(d, k).map(|inner| PyPureState { inner }).map_err(to_py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn fidelity(&self, other: &PyPureState) -> PyResult<f64> {
        geometry::fidelity(&self.inner, &other.inner).map_err(to_py_err)
    }

    fn dist2(&self, other: &PyPureState) -> PyResult<f64> {
        geometry::frobenius_dist2(&self.inner, &other.inner).map_err(to_py_err)
    }

    fn same_projector(&self, other: &PyPureState) -> bool {
        self.inner.same_projector(&other.inner)
    }

    /// Dense projector as nested lists of complex numbers.
    fn projector(&self) -> Vec<Vec<Complex64>> {
        let p = self.inner.projector();
        (0..p.nrows()).map(|r| (0..p.ncols()).map(|c| p[(r, c)]).collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("PureState({:?})", self.inner.amplitudes())
    }
}

/// Tangent vector at a base state, stored as the component orthogonal to it.
#[pyclass(name = "TangentVector", module = "qudit_bandit", frozen, from_py_object)]
#[derive(Clone)]
struct PyTangentVector {
    inner: geometry::TangentVector,
}

#[pymethods]
impl PyTangentVector {
    #[new]
    fn new(base: &PyPureState, phi: Vec<Complex64>) -> PyResult<Self> {
        geometry::TangentVector::new(base.inner.clone(), phi).map(|inner| PyTangentVector { inner }).map_err(to_py_err)
    }

    #[getter]
    fn base(&self) -> PyPureState {
        PyPureState { inner: self.inner.base().clone() }
    }

    fn phi(&self) -> Vec<Complex64> {
        self.inner.phi().to_vec()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn inner_product(&self, other: &PyTangentVector) -> PyResult<f64> {
        geometry::tangent_inner(&self.inner, &other.inner).map_err(to_py_err)
    }

    fn scaled(&self, c: f64) -> Self {
        PyTangentVector { inner: self.inner.scaled(c) }
    }

    fn __add__(&self, other: &PyTangentVector) -> PyResult<Self> {
        self.inner.add(&other.inner).map(|inner| PyTangentVector { inner }).map_err(to_py_err)
    }

    fn __sub__(&self, other: &PyTangentVector) -> PyResult<Self> {
        self.inner.sub(&other.inner).map(|inner| PyTangentVector { inner }).map_err(to_py_err)
    }

    fn to_matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.to_matrix();
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
    }
}

/// Simulated source of copies of a hidden pure state.
#[pyclass(name = "Environment", module = "qudit_bandit")]
struct PyEnvironment {
    inner: environment::Environment,
}

#[pymethods]
impl PyEnvironment {
    #[new]
    #[pyo3(signature = (d, seed, state = None))]
    fn new(d: usize, seed: u64, state: Option<PyPureState>) -> PyResult<Self> {
        environment::Environment::new(d, seed, state.map(|s| s.inner))
            .map(|inner| PyEnvironment { inner })
            .map_err(to_py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn copies_consumed(&self) -> u64 {
        self.inner.copies_consumed()
    }

    /// Measures one fresh copy with the projector onto `action`.
    fn measure(&mut self, action: &PyPureState) -> PyResult<bool> {
        self.inner.measure(&action.inner).map_err(to_py_err)
    }

    fn evaluator(&self) -> PyEvaluator {
        PyEvaluator { inner: self.inner.evaluator() }
    }
}

/// Ground-truth accounting handle.
#[pyclass(name = "Evaluator", module = "qudit_bandit", frozen)]
struct PyEvaluator {
    inner: environment::Evaluator,
}

#[pymethods]
impl PyEvaluator {
    fn hidden_state(&self) -> PyPureState {
        PyPureState { inner: self.inner.hidden_state().clone() }
    }

    fn regret_increment(&self, action: &PyPureState) -> PyResult<f64> {
        check_dim(self.inner.hidden_state().dim(), action.inner.dim())?;
        Ok(self.inner.regret_increment(&action.inner))
    }

    fn infidelity(&self, estimate: &PyPureState) -> PyResult<f64> {
        check_dim(self.inner.hidden_state().dim(), estimate.inner.dim())?;
        Ok(self.inner.infidelity(&estimate.inner))
    }
}

fn check_dim(expected: usize, found: usize) -> PyResult<()> {
    if expected != found {
        return Err(to_py_err(qudit_bandit::Error::DimensionMismatch { expected, found }));
    }
    Ok(())
}

#[pyfunction]
fn tangent_target(base: &PyPureState, rho: &PyPureState) -> PyResult<PyTangentVector> {
    geometry::tangent_target(&base.inner, &rho.inner).map(|inner| PyTangentVector { inner }).map_err(to_py_err)
}

#[pyfunction]
fn complete_tangent_basis(base: &PyPureState) -> PyResult<Vec<PyTangentVector>> {
    let b = geometry::complete_tangent_basis(&base.inner).map_err(to_py_err)?;
    Ok(b.vectors().iter().map(|v| PyTangentVector { inner: v.clone() }).collect())
}

#[pyfunction]
fn retract(base: &PyPureState, v: &PyTangentVector, tau: f64) -> PyResult<PyPureState> {
    geometry::retract(&base.inner, &v.inner, tau).map(|inner| PyPureState { inner }).map_err(to_py_err)
}

#[pyfunction]
fn update_base(base: &PyPureState, delta_hat: &PyTangentVector) -> PyResult<PyPureState> {
    geometry::update_base(&base.inner, &delta_hat.inner).map(|inner| PyPureState { inner }).map_err(to_py_err)
}

/// The hidden state an `Environment` draws for this seed when none is given.
#[pyfunction]
fn haar_state(d: usize, seed: u64) -> PyResult<PyPureState> {
    let mut rng = qudit_bandit::rng::StreamKey::new(seed).named("state").rng();
    environment::haar_state(d, &mut rng).map(|inner| PyPureState { inner }).map_err(to_py_err)
}

/// Algorithm constants for dimension `d` and budget `t_total`, as a dict.
#[pyfunction]
#[pyo3(signature = (d, t_total, preset = "practical", overrides = None))]
fn derive_constants<'py>(
    py: Python<'py>,
    d: usize,
    t_total: u64,
    preset: &str,
    overrides: Option<BTreeMap<String, f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let k = engine::derive_constants(d, t_total, parse_preset(preset)?, &canonical_overrides(overrides)?)
        .map_err(to_py_err)?;
    serialize_to_py(py, &k)
}

/// Full run (warm-up then epochs) against a simulated state; returns the run record as a dict.
#[pyfunction]
#[pyo3(signature = (d, t_total, seed, preset = "practical", overrides = None, checkpoint_every = None, state = None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    d: usize,
    t_total: u64,
    seed: u64,
    preset: &str,
    overrides: Option<BTreeMap<String, f64>>,
    checkpoint_every: Option<u64>,
    state: Option<PyPureState>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig {
        d,
        t_total,
        preset: parse_preset(preset)?,
        overrides: canonical_overrides(overrides)?,
        checkpoint_every,
        seed,
    };
    let state = state.map(|s| s.inner);
    let record = py
        .detach(move || {
            let mut env = environment::Environment::new(d, seed, state)?;
            let ev = env.evaluator();
            engine::run(&mut env, Some(&ev), &cfg)
        })
        .map_err(to_py_err)?;
    serialize_to_py(py, &record)
}

/// Runs a batch from CLI-style arguments (without the program name) and returns the summary dict.
#[pyfunction]
fn run_batch<'py>(py: Python<'py>, args: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    let argv = std::iter::once("qudit-bandit".to_string()).chain(args);
    let cfg = config::parse_config(argv).map_err(to_py_err)?;
    let outcome = py.detach(|| batch::run_batch(&cfg)).map_err(to_py_err)?;
    serialize_to_py(py, &outcome.summary)
}

#[pymodule]
#[pyo3(name = "qudit_bandit")]
fn qudit_bandit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPureState>()?;
    m.add_class::<PyTangentVector>()?;
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyEvaluator>()?;
    m.add_function(wrap_pyfunction!(tangent_target, m)?)?;
    m.add_function(wrap_pyfunction!(complete_tangent_basis, m)?)?;
    m.add_function(wrap_pyfunction!(retract, m)?)?;
    m.add_function(wrap_pyfunction!(update_base, m)?)?;
    m.add_function(wrap_pyfunction!(haar_state, m)?)?;
    m.add_function(wrap_pyfunction!(derive_constants, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    Ok(())
}
