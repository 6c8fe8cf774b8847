use std::path::PathBuf;

use aptom_core::checks::run_checks;
use aptom_core::config::{apply_overrides, parse_config};
use aptom_core::figures::{reproduce_figure, FigureId, FigureOptions};
use aptom_core::{
    eigenfrequencies, ep_speed, group_delay, isolation_ratio, load_config, sagnac_shift,
    solve_steady_state, transmission, write_config, Axis, Direction, Error, MVariant,
    OperatingPoint, Preset, Quantity, SweepSpec, SystemParams,
};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(aptom, AptomError, PyException);
create_exception!(aptom, ConfigError, AptomError);
create_exception!(aptom, NonConvergenceError, AptomError);
create_exception!(aptom, SingularError, AptomError);

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::Domain(_) | Error::UnknownFigure(_) => {
            ConfigError::new_err(msg)
        }
        Error::NonConvergence { .. } => NonConvergenceError::new_err(msg),
        Error::Singular { .. } | Error::DipSingularity { .. } | Error::UndefinedIsolation { .. } => {
            SingularError::new_err(msg)
        }
        Error::Io(_) => PyOSError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for aptom_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A validated parameter set.
#[pyclass(name = "Params", module = "aptom", frozen)]
pub struct PyParams {
    inner: SystemParams,
}

#[pymethods]
impl PyParams {
    /// Built-in set: "microsphere-nanostring" or "spinning-sphere".
    #[staticmethod]
    #[pyo3(signature = (name = "microsphere-nanostring"))]
    fn preset(name: &str) -> PyResult<Self> {
        let p: Preset = name.parse().py()?;
        Ok(PyParams { inner: p.params() })
    }

    /// Parse `key = value` configuration text.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(PyParams {
            inner: parse_config(text).py()?.build().py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyParams {
            inner: load_config(path).py()?,
        })
    }

    /// Copy with overrides applied; all are validated together.
    #[pyo3(signature = (**overrides))]
    fn with_overrides(&self, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut pairs = Vec::new();
        if let Some(d) = overrides {
            for (k, v) in d.iter() {
                pairs.push((k.extract::<String>()?, v.str()?.to_string()));
            }
        }
        let mut spec = self.inner.to_spec();
        apply_overrides(&mut spec, &pairs).py()?;
        Ok(PyParams {
            inner: spec.build().py()?,
        })
    }

    fn to_config(&self) -> String {
        write_config(&self.inner)
    }

    fn __getattr__(&self, name: &str) -> PyResult<f64> {
        let v = serde_json::to_value(&self.inner).expect("params serialise");
        v.get(name)
            .and_then(|x| x.as_f64())
            .ok_or_else(|| pyo3::exceptions::PyAttributeError::new_err(name.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(omega_c={:e}, kappa={:e}, gamma_c={:e}, omega_m={:e})",
            self.inner.omega_c, self.inner.kappa, self.inner.gamma_c, self.inner.omega_m
        )
    }
}

fn variant(name: &str) -> PyResult<MVariant> {
    name.parse().py()
}

fn point(omega_spin: f64, delta_p: f64, pump: bool) -> PyResult<OperatingPoint> {
    Ok(OperatingPoint::new(omega_spin, delta_p).py()?.with_pump(pump))
}

/// Spinning speed of the exceptional point, Hz.
#[pyfunction]
fn ep_speed_hz(p: &PyParams) -> PyResult<f64> {
    ep_speed(&p.inner).py()
}

/// Rotation-induced splitting at one spinning speed, Hz.
#[pyfunction]
fn sagnac_shift_hz(p: &PyParams, omega_spin: f64) -> f64 {
    sagnac_shift(&p.inner, omega_spin).delta_sag
}

/// (ω₊, ω₋, phase label).
#[pyfunction]
fn eigenvalues(p: &PyParams, omega_spin: f64) -> (Complex64, Complex64, &'static str) {
    let e = eigenfrequencies(&p.inner, &sagnac_shift(&p.inner, omega_spin));
    (e.omega_plus, e.omega_minus, e.phase.label())
}

#[pyfunction]
#[pyo3(signature = (p, omega_spin, pump = true))]
fn steady_state<'py>(py: Python<'py>, p: &PyParams, omega_spin: f64, pump: bool) -> PyResult<Bound<'py, PyDict>> {
    let s = solve_steady_state(&p.inner, &point(omega_spin, 0.0, pump)?).py()?;
    let d = PyDict::new(py);
    d.set_item("x_bar", s.x_bar)?;
    d.set_item("a_cw", s.a_cw)?;
    d.set_item("a_ccw", s.a_ccw)?;
    d.set_item("iterations", s.iterations)?;
    d.set_item("residual", s.residual)?;
    Ok(d)
}

/// Complex transmission (t_cw, t_ccw).
#[pyfunction]
#[pyo3(signature = (p, omega_spin, delta_p, pump = true, m_variant = "symmetrized"))]
fn probe_transmission(
    p: &PyParams,
    omega_spin: f64,
    delta_p: f64,
    pump: bool,
    m_variant: &str,
) -> PyResult<(Complex64, Complex64)> {
    let op = point(omega_spin, delta_p, pump)?;
    let s = solve_steady_state(&p.inner, &op).py()?;
    let r = transmission(&p.inner, &op, &s, variant(m_variant)?).py()?;
    Ok((r.t_cw, r.t_ccw))
}

/// Isolation ratio, dB.
#[pyfunction]
#[pyo3(signature = (p, omega_spin, delta_p, pump = true, m_variant = "symmetrized"))]
fn isolation_db(p: &PyParams, omega_spin: f64, delta_p: f64, pump: bool, m_variant: &str) -> PyResult<f64> {
    let op = point(omega_spin, delta_p, pump)?;
    let s = solve_steady_state(&p.inner, &op).py()?;
    let r = transmission(&p.inner, &op, &s, variant(m_variant)?).py()?;
    isolation_ratio(&r).py()
}

/// Group delay of one input, s.
#[pyfunction]
#[pyo3(signature = (p, omega_spin, delta_p, direction = "cw", pump = true, m_variant = "symmetrized"))]
fn group_delay_s(
    p: &PyParams,
    omega_spin: f64,
    delta_p: f64,
    direction: &str,
    pump: bool,
    m_variant: &str,
) -> PyResult<f64> {
    let dir: Direction = direction.parse().py()?;
    let op = point(omega_spin, delta_p, pump)?;
    group_delay(&p.inner, &op, dir, variant(m_variant)?).py()
}

/// Grid evaluation. Returns a dict with "shape" and one flat row-major list
/// per output column; failed cells are NaN and listed under "errors".
#[pyfunction]
#[pyo3(signature = (p, omega_spin, delta_p, quantities = vec!["I".to_string()], pump = true, m_variant = "symmetrized"))]
fn sweep<'py>(
    py: Python<'py>,
    p: &PyParams,
    omega_spin: Vec<f64>,
    delta_p: Vec<f64>,
    quantities: Vec<String>,
    pump: bool,
    m_variant: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let q = quantities
        .iter()
        .map(|s| s.parse::<Quantity>())
        .collect::<aptom_core::Result<Vec<_>>>()
        .py()?;
    let spec = SweepSpec::new(Axis::explicit(omega_spin).py()?, Axis::explicit(delta_p).py()?, q)
        .with_pump(pump)
        .with_variant(variant(m_variant)?);
    let inner = p.inner.clone();
    let r = py.detach(|| aptom_core::run_sweep(&inner, &spec)).py()?;

    let d = PyDict::new(py);
    d.set_item("shape", (r.n_omega(), r.n_delta_p()))?;
    for name in &r.columns {
        d.set_item(*name, r.values(name).unwrap_or_default())?;
    }
    let errors: Vec<(usize, usize, &str, String)> = r
        .errors()
        .map(|(i, j, col, e)| (i, j, col, e.message.clone()))
        .collect();
    d.set_item("errors", errors)?;
    Ok(d)
}

/// Built-in oracle suite: list of (name, status, value, tolerance, detail).
#[pyfunction]
fn checks(p: &PyParams) -> Vec<(&'static str, &'static str, f64, f64, String)> {
    run_checks(&p.inner)
        .into_iter()
        .map(|c| {
            let status = match (c.informational, c.passed) {
                (true, _) => "info",
                (false, true) => "pass",
                (false, false) => "fail",
            };
            (c.name, status, c.value, c.tolerance, c.detail)
        })
        .collect()
}

/// Write one figure bundle into `out_dir`; returns the written paths.
#[pyfunction]
#[pyo3(signature = (p, figure, out_dir, heatmap_points = 400, line_points = 2000))]
fn reproduce(
    py: Python<'_>,
    p: &PyParams,
    figure: &str,
    out_dir: PathBuf,
    heatmap_points: usize,
    line_points: usize,
) -> PyResult<Vec<PathBuf>> {
    let id: FigureId = figure.parse().py()?;
    let opts = FigureOptions {
        heatmap_points,
        line_points,
        ..FigureOptions::default()
    };
    let inner = p.inner.clone();
    py.detach(|| reproduce_figure(&inner, id, &opts)?.write_dir(&out_dir)).py()
}

#[pymodule]
fn aptom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("AptomError", py.get_type::<AptomError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("NonConvergenceError", py.get_type::<NonConvergenceError>())?;
    m.add("SingularError", py.get_type::<SingularError>())?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(ep_speed_hz, m)?)?;
    m.add_function(wrap_pyfunction!(sagnac_shift_hz, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(probe_transmission, m)?)?;
    m.add_function(wrap_pyfunction!(isolation_db, m)?)?;
    m.add_function(wrap_pyfunction!(group_delay_s, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(checks, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
