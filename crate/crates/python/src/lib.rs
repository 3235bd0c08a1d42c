//! Python bindings. Structured results come back as plain dicts and lists.

use prevalence::estimate::{estimate_on_domain, refine, RefineOptions};
use prevalence::mle::{self, FitOptions, Label, SampleBatch};
use prevalence::sim::Scenario;
use prevalence::{Bathtub, Branch, Density, DomainSet, FamilyTag, MixturePopulation, Objective, Sampler};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: prevalence::Error) -> PyErr {
    match e {
        prevalence::Error::Io { .. } | prevalence::Error::Csv(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A density on a closed interval.
#[pyclass(name = "ProbabilityModel", module = "pyprevalence", frozen)]
struct PyModel {
    inner: prevalence::ProbabilityModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse(text)? })
    }

    #[staticmethod]
    fn burr_truncated(c: f64, k: f64, scale: f64, lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self { inner: prevalence::ProbabilityModel::burr_truncated(c, k, scale, lo, hi).map_err(err)? })
    }

    #[staticmethod]
    fn beta(a: f64, b: f64, lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self { inner: prevalence::ProbabilityModel::beta(a, b, lo, hi).map_err(err)? })
    }

    #[staticmethod]
    fn triangular_up(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self { inner: prevalence::ProbabilityModel::triangular_up(lo, hi).map_err(err)? })
    }

    #[staticmethod]
    fn triangular_down(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self { inner: prevalence::ProbabilityModel::triangular_down(lo, hi).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn params(&self) -> std::collections::BTreeMap<String, f64> {
        self.inner.params()
    }

    #[getter]
    fn support(&self) -> (f64, f64) {
        let s = self.inner.support();
        (s.lo, s.hi)
    }

    fn pdf(&self, r: f64) -> f64 {
        self.inner.pdf(r)
    }

    fn cdf(&self, r: f64) -> Option<f64> {
        self.inner.cdf(r)
    }

    fn sample(&self, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        self.inner.sample(count, seed).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ProbabilityModel({})", self.to_json().unwrap_or_default())
    }
}

fn population(pos: &PyModel, neg: &PyModel, q: f64) -> PyResult<MixturePopulation> {
    MixturePopulation::new(q, pos.inner.clone(), neg.inner.clone()).map_err(err)
}

/// Level set with Q-measure `q_hat` on `branch` ("plus" or "minus").
#[pyfunction]
#[pyo3(signature = (pos, neg, q, q_hat, branch = "plus"))]
fn bathtub<'py>(
    py: Python<'py>,
    pos: &PyModel,
    neg: &PyModel,
    q: f64,
    q_hat: f64,
    branch: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let branch: Branch = branch.parse().map_err(err)?;
    let solution = Bathtub::new(population(pos, neg, q)?).solve(q_hat, branch).map_err(err)?;
    to_py(py, &solution)
}

#[pyfunction]
#[pyo3(signature = (pos, neg, q, grid = 101, tol = 1e-6))]
fn optimize<'py>(
    py: Python<'py>,
    pos: &PyModel,
    neg: &PyModel,
    q: f64,
    grid: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let result = Objective::new(population(pos, neg, q)?).minimize(grid, tol).map_err(err)?;
    to_py(py, &result)
}

/// Fits `family` to values already on the unit interval.
#[pyfunction]
#[pyo3(signature = (family, values, seed = 0))]
fn fit<'py>(py: Python<'py>, family: &str, values: Vec<f64>, seed: u64) -> PyResult<(PyModel, Bound<'py, PyAny>)> {
    let family: FamilyTag = family.parse().map_err(err)?;
    let batch = SampleBatch::new(values, Label::Unlabeled).map_err(err)?;
    let result = mle::fit(family, &batch, &FitOptions { seed, ..FitOptions::default() }).map_err(err)?;
    let meta = to_py(py, &result)?;
    Ok((PyModel { inner: result.model }, meta))
}

/// Estimate on a fixed domain when `domain_json` is given, otherwise by
/// iterative refinement from `q0`.
#[pyfunction]
#[pyo3(signature = (values, pos, neg, q0 = 0.5, domain_json = None))]
fn estimate<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    pos: &PyModel,
    neg: &PyModel,
    q0: f64,
    domain_json: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    match domain_json {
        Some(text) => {
            let set: DomainSet = parse(text)?;
            to_py(py, &estimate_on_domain(&values, &pos.inner, &neg.inner, &set).map_err(err)?)
        }
        None => {
            let (_, report) = refine(&values, &pos.inner, &neg.inner, q0, &RefineOptions::default()).map_err(err)?;
            to_py(py, &report)
        }
    }
}

/// Runs a scenario given as JSON text and returns the summary report.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, scenario_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let scenario: Scenario = parse(scenario_json)?;
    let (report, _) = scenario.run().map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn pyprevalence(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(bathtub, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
