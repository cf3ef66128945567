//! Python bindings: cavity response, noise spectra, presets, line-shape
//! classification and fitting.

use std::collections::HashMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crit::analysis;
use crit::config::{self, RunConfig};
use crit::fit::{self, FitParameter, FitProblem, ModelSetup, ObservedSpectrum};
use crit::sweep::{self, ScanSpec, SweepResult};
use crit::{CoupledCavityConfig, Error, InputGaussianState};

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "CavityConfig", module = "pycrit", from_py_object)]
#[derive(Clone)]
struct PyCavityConfig {
    inner: CoupledCavityConfig,
}

#[pymethods]
impl PyCavityConfig {
    /// Lossless coupled cavity from power reflectivities.
    #[new]
    #[pyo3(signature = (r0_sq, r1_sq, r2_sq, single_cavity = false))]
    fn new(r0_sq: f64, r1_sq: f64, r2_sq: f64, single_cavity: bool) -> PyResult<Self> {
        let mut inner = CoupledCavityConfig::from_power(r0_sq, r1_sq, r2_sq);
        if single_cavity {
            inner = inner.with_topology(crit::Topology::SingleCavity);
        }
        inner.validate().map_err(to_py)?;
        Ok(PyCavityConfig { inner })
    }

    #[getter]
    fn r0(&self) -> f64 {
        self.inner.r0
    }

    #[getter]
    fn r1(&self) -> f64 {
        self.inner.r1
    }

    #[getter]
    fn r2(&self) -> f64 {
        self.inner.r2
    }

    fn fsr(&self) -> f64 {
        self.inner.fsr2()
    }

    /// Complex reflection amplitude at a laser detuning in Hz.
    fn response_at(&self, detuning: f64) -> PyResult<Complex64> {
        self.inner.response_at(detuning).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "CavityConfig(r0={}, r1={}, r2={})",
            self.inner.r0, self.inner.r1, self.inner.r2
        )
    }
}

#[pyclass(name = "InputState", module = "pycrit", from_py_object)]
#[derive(Clone)]
struct PyInputState {
    inner: InputGaussianState,
}

#[pymethods]
impl PyInputState {
    #[new]
    fn new(var_x: f64, var_y: f64) -> PyResult<Self> {
        Ok(PyInputState {
            inner: InputGaussianState::new(var_x, var_y).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn vacuum() -> Self {
        PyInputState {
            inner: InputGaussianState::vacuum(),
        }
    }

    #[staticmethod]
    fn from_squeeze_factor(s: f64) -> PyResult<Self> {
        Ok(PyInputState {
            inner: InputGaussianState::from_squeeze_factor(s).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_db(squeeze_db: f64, antisqueeze_db: f64) -> PyResult<Self> {
        Ok(PyInputState {
            inner: InputGaussianState::from_db(squeeze_db, antisqueeze_db).map_err(to_py)?,
        })
    }

    #[getter]
    fn var_x(&self) -> f64 {
        self.inner.var_x
    }

    #[getter]
    fn var_y(&self) -> f64 {
        self.inner.var_y
    }
}

#[pyclass(name = "RunConfig", module = "pycrit", from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(PyRunConfig {
            inner: config::preset(name).map_err(to_py)?,
        })
    }

    /// Parses a TOML (or JSON) configuration document.
    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        Ok(PyRunConfig {
            inner: config::load_config(text).map_err(to_py)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn cavity(&self) -> PyCavityConfig {
        PyCavityConfig {
            inner: self.inner.cavity_config(),
        }
    }

    fn input_state(&self) -> PyResult<PyInputState> {
        Ok(PyInputState {
            inner: self.inner.input_state().map_err(to_py)?,
        })
    }

    /// Sideband frequency in Hz.
    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    #[pyo3(signature = (points = None))]
    fn spectrum(&self, points: Option<usize>) -> PyResult<HashMap<String, Vec<f64>>> {
        let mut spec = self.inner.scan_spec();
        if let Some(p) = points {
            spec.points = p;
        }
        let result = sweep::scan(
            &self.inner.cavity_config(),
            &self.inner.input_state().map_err(to_py)?,
            self.inner.omega(),
            &self.inner.detection_model().map_err(to_py)?,
            &spec,
        )
        .map_err(to_py)?;
        Ok(columns(&result))
    }

    #[pyo3(signature = (points = None))]
    fn reflectivity(&self, points: Option<usize>) -> PyResult<HashMap<String, Vec<f64>>> {
        let mut spec = self.inner.scan_spec();
        if let Some(p) = points {
            spec.points = p;
        }
        let result = sweep::intensity_scan(&self.inner.cavity_config(), &spec).map_err(to_py)?;
        Ok(columns(&result))
    }
}

fn columns(result: &SweepResult) -> HashMap<String, Vec<f64>> {
    let fsr = result.fsr();
    let col = |f: &dyn Fn(&sweep::SweepRecord) -> f64| result.records.iter().map(f).collect();
    HashMap::from([
        ("detuning_hz".to_string(), col(&|r| r.detuning)),
        ("detuning_fsr".to_string(), col(&|r| r.detuning / fsr)),
        ("intensity".to_string(), col(&|r| r.intensity)),
        ("var_x".to_string(), col(&|r| r.var_x)),
        ("var_y".to_string(), col(&|r| r.var_y)),
    ])
}

/// Noise spectra over a symmetric frequency scan of full width `span` Hz.
#[pyfunction]
fn frequency_scan(
    cavity: &PyCavityConfig,
    input: &PyInputState,
    omega: f64,
    span: f64,
    points: usize,
) -> PyResult<HashMap<String, Vec<f64>>> {
    let result = sweep::frequency_scan(&cavity.inner, &input.inner, omega, &ScanSpec::frequency(span, points))
        .map_err(to_py)?;
    Ok(columns(&result))
}

fn zip_series(detuning: Vec<f64>, values: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    if detuning.len() != values.len() {
        return Err(PyValueError::new_err("detuning and values differ in length"));
    }
    Ok(detuning.into_iter().zip(values).collect())
}

/// Line-shape label and extremum signature of a sampled series.
#[pyfunction]
fn classify(detuning: Vec<f64>, values: Vec<f64>) -> PyResult<(String, String)> {
    let label = analysis::classify(&zip_series(detuning, values)?).map_err(to_py)?;
    Ok((label.label.to_string(), label.signature))
}

#[pyfunction]
fn window_metrics(detuning: Vec<f64>, values: Vec<f64>) -> PyResult<HashMap<String, f64>> {
    let m = analysis::window_metrics(&zip_series(detuning, values)?).map_err(to_py)?;
    Ok(HashMap::from([
        ("window_height".to_string(), m.window_height),
        ("window_fwhm".to_string(), m.window_fwhm),
        ("envelope_fwhm".to_string(), m.envelope_fwhm),
        ("splitting".to_string(), m.splitting),
    ]))
}

/// Fits `free` parameters of `run` to the observed series; returns the
/// estimates plus `residual` and `converged` (1.0 or 0.0).
#[pyfunction]
#[pyo3(signature = (run, detuning, free, guess, var_x = None, var_y = None, intensity = None, max_evals = fit::DEFAULT_MAX_EVALS))]
#[allow(clippy::too_many_arguments)]
fn fit_spectrum(
    run: &PyRunConfig,
    detuning: Vec<f64>,
    free: Vec<String>,
    guess: Vec<f64>,
    var_x: Option<Vec<f64>>,
    var_y: Option<Vec<f64>>,
    intensity: Option<Vec<f64>>,
    max_evals: usize,
) -> PyResult<HashMap<String, f64>> {
    let params = free
        .iter()
        .map(|s| s.parse::<FitParameter>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let observed = ObservedSpectrum {
        detuning,
        var_x,
        var_y,
        intensity,
    };
    let setup = ModelSetup::from_run(&run.inner).map_err(to_py)?;
    let problem = FitProblem::new(observed, setup, &params).map_err(to_py)?;
    let result = fit::fit_parameters(&problem, &guess, max_evals).map_err(to_py)?;
    let mut out: HashMap<String, f64> = params
        .iter()
        .zip(&result.estimates)
        .map(|(p, v)| (p.name().to_string(), *v))
        .collect();
    out.insert("residual".into(), result.residual);
    out.insert("converged".into(), if result.converged { 1.0 } else { 0.0 });
    Ok(out)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    config::PRESETS.iter().map(|p| p.name).collect()
}

/// Runs the invariant suite; returns (passed, failed).
#[pyfunction]
#[pyo3(signature = (seed = 1, cases = 200))]
fn run_checks(seed: u64, cases: usize) -> (usize, usize) {
    let report = crit::checks::run_checks(seed, cases);
    (report.passed(), report.failed())
}

#[pymodule]
fn pycrit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCavityConfig>()?;
    m.add_class::<PyInputState>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_function(wrap_pyfunction!(frequency_scan, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(window_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(fit_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
