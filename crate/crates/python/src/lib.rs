//! Python bindings. Structured results (budgets, fits, calibrations, sweep
//! points) come back as plain dicts.

use backaction::budget::{log_spaced, run_sweep};
use backaction::fitting::{calibrate_g0 as calibrate, fit_lorentzian as fit};
use backaction::physics;
use backaction::synth::{model_spectrum, synthesize as synth};
use backaction::{MeasurementConfig, NoiseBudget, SpectralUnit, Spectrum, SynthRequest, SystemParams};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: backaction::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Cavity optomechanical device; frequencies in Hz, mass in kg.
#[pyclass(name = "OptomechSystem", frozen, skip_from_py_object, module = "backaction_py")]
#[derive(Clone, Copy)]
struct PySystem(backaction::OptomechSystem);

#[pymethods]
impl PySystem {
    #[new]
    fn new(
        cavity_freq: f64,
        cavity_linewidth: f64,
        mech_freq: f64,
        mech_linewidth: f64,
        coupling: f64,
        mass: f64,
    ) -> PyResult<Self> {
        backaction::OptomechSystem::new(SystemParams {
            cavity_freq,
            cavity_linewidth,
            mech_freq,
            mech_linewidth,
            coupling,
            mass,
        })
        .map(Self)
        .map_err(err)
    }

    /// The reference 9.357 MHz drum in a 6.707 GHz cavity.
    #[staticmethod]
    fn reference_device() -> Self {
        Self(backaction::OptomechSystem::reference_device())
    }

    #[getter]
    fn cavity_freq(&self) -> f64 {
        self.0.cavity_freq()
    }
    #[getter]
    fn cavity_linewidth(&self) -> f64 {
        self.0.cavity_linewidth()
    }
    #[getter]
    fn mech_freq(&self) -> f64 {
        self.0.mech_freq()
    }
    #[getter]
    fn mech_linewidth(&self) -> f64 {
        self.0.mech_linewidth()
    }
    #[getter]
    fn coupling(&self) -> f64 {
        self.0.coupling()
    }
    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn x_zp(&self) -> f64 {
        physics::x_zp(&self.0)
    }
    fn s_zp(&self) -> f64 {
        physics::s_zp(&self.0)
    }
    fn p_sql(&self) -> f64 {
        physics::p_sql(&self.0)
    }
    fn n_thermal(&self, temperature: f64) -> f64 {
        physics::n_thermal(&self.0, temperature)
    }
    fn optimum_power(&self, efficiency: f64) -> PyResult<f64> {
        physics::optimum_power(&self.0, efficiency).map_err(err)
    }
    fn transduction(&self) -> f64 {
        physics::transduction(&self.0)
    }
    fn group_delay(&self, probe_freq: f64) -> f64 {
        physics::group_delay(&self.0, probe_freq)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0.params())
    }
}

/// Averaged PSD on a frequency grid.
#[pyclass(name = "Spectrum", frozen, module = "backaction_py")]
struct PySpectrum(Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn freqs(&self) -> Vec<f64> {
        self.0.freqs().to_vec()
    }
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }
    #[getter]
    fn unit(&self) -> &'static str {
        self.0.unit().as_str()
    }
    #[getter]
    fn n_avg(&self) -> u64 {
        self.0.n_avg()
    }
    #[getter]
    fn seed(&self) -> Option<u64> {
        self.0.seed()
    }
    fn to_csv(&self) -> String {
        self.0.to_csv_string()
    }
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Spectrum::from_csv_str(text).map(Self).map_err(err)
    }
    fn __len__(&self) -> usize {
        self.0.freqs().len()
    }
}

fn measurement(sys: &PySystem, power: f64, efficiency: f64, temperature: f64, n_avg: u64) -> MeasurementConfig {
    let mut cfg = MeasurementConfig::reference_default(&sys.0, power);
    cfg.efficiency = efficiency;
    cfg.temperature = temperature;
    cfg.n_avg = n_avg;
    cfg
}

/// Noise budget components at one operating point, m²/Hz.
#[pyfunction]
#[pyo3(signature = (system, power, efficiency=0.02, temperature=0.04))]
fn noise_budget(py: Python<'_>, system: &PySystem, power: f64, efficiency: f64, temperature: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &NoiseBudget::evaluate(&system.0, power, efficiency, temperature).map_err(err)?)
}

/// Synthetic averaged spectrum on the default grid around the resonance.
#[pyfunction]
#[pyo3(signature = (system, power, seed=1, efficiency=0.02, temperature=0.04, n_avg=500, unit="displacement", noise_free=false))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    system: &PySystem,
    power: f64,
    seed: u64,
    efficiency: f64,
    temperature: f64,
    n_avg: u64,
    unit: &str,
    noise_free: bool,
) -> PyResult<PySpectrum> {
    let unit: SpectralUnit = unit.parse().map_err(PyValueError::new_err)?;
    let req = SynthRequest {
        system: system.0,
        config: measurement(system, power, efficiency, temperature, n_avg),
        seed,
        unit,
    };
    let spec = if noise_free { model_spectrum(&req) } else { synth(&req) };
    spec.map(PySpectrum).map_err(err)
}

/// Lorentzian-plus-floor fit with covariance.
#[pyfunction]
fn fit_lorentzian(py: Python<'_>, spectrum: &PySpectrum) -> PyResult<Py<PyAny>> {
    to_py(py, &fit(&spectrum.0, None).map_err(err)?)
}

/// g0/2π in Hz from a weak-drive phase spectrum. The coupling stored in
/// `system` is ignored.
#[pyfunction]
fn calibrate_g0(py: Python<'_>, spectrum: &PySpectrum, system: &PySystem, temperature: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &calibrate(&spectrum.0, &system.0.uncalibrated(), temperature).map_err(err)?)
}

/// Synthesize-and-fit sweep; returns the points as dicts.
#[pyfunction]
#[pyo3(signature = (system, powers, seed=1, efficiency=0.02, temperature=0.04, n_avg=500))]
fn sweep(
    py: Python<'_>,
    system: &PySystem,
    powers: Vec<f64>,
    seed: u64,
    efficiency: f64,
    temperature: f64,
    n_avg: u64,
) -> PyResult<Py<PyAny>> {
    let first = powers.first().copied().unwrap_or(1.0);
    let cfg = measurement(system, first, efficiency, temperature, n_avg);
    to_py(py, &run_sweep(&system.0, &cfg, &powers, seed).map_err(err)?.points)
}

/// `n` log-spaced values from `start` to `stop`.
#[pyfunction(name = "log_spaced")]
fn log_spaced_py(start: f64, stop: f64, n: usize) -> Vec<f64> {
    log_spaced(start, stop, n)
}

#[pymodule]
fn backaction_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(noise_budget, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lorentzian, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_g0, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(log_spaced_py, m)?)?;
    Ok(())
}
