//! Python bindings. Fields cross the boundary as flat row-major lists;
//! initial data and spectral densities are plain dicts with the same shape
//! as the TOML configuration tables.

use fraclab_core::decay::{NormKind, SeriesDescriptor};
use fraclab_core::linear::{log_spaced, oracle_besov_series as core_oracle_series, RadialSpectralDensity};
use fraclab_core::littlewood_paley::BlockRange;
use fraclab_core::run::{run as core_run, Model, RunConfig, DEFAULT_SMALLNESS_BUDGET};
use fraclab_core::{
    bsvf, BesovParams, DecayClaim, DensityForm, DyadicProfile, Error, Exponent, Grid2D, InitialData, NormSeries,
    RealField,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Quadrature { .. }
        | Error::Divergent(_)
        | Error::Cfl { .. }
        | Error::NumericalAbort { .. }
        | Error::NonFinite { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Deserializes a Python dict through its JSON rendering.
fn from_dict<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let json = obj.py().import("json")?;
    let text: String = json.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Periodic `n x n` grid of side `length`.
#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(Grid2D);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize, length: f64) -> PyResult<Self> {
        Grid2D::new(n, length).map(Self).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn xi_min(&self) -> f64 {
        self.0.xi_min()
    }

    #[getter]
    fn xi_max_retained(&self) -> f64 {
        self.0.xi_max_retained()
    }

    /// `(j_min, j_max)` of the dyadic blocks meeting the retained modes.
    fn block_range(&self) -> PyResult<(i32, i32)> {
        let r = BlockRange::for_grid(&self.0, &DyadicProfile::default()).map_err(py_err)?;
        Ok((r.j_min, r.j_max))
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, length={})", self.0.n(), self.0.length())
    }
}

/// Real field on a grid, values row-major with index `i1 * n + i2`.
#[pyclass(name = "Field", frozen, from_py_object)]
#[derive(Clone)]
struct PyField(RealField);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: PyGrid, values: Vec<f64>) -> PyResult<Self> {
        RealField::new(grid.0, values).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn zeros(grid: PyGrid) -> Self {
        Self(RealField::zeros(grid.0))
    }

    /// Field from an initial-data dict such as
    /// `{"type": "shells", "amplitude": 0.02, "j_lo": -6, "j_hi": 0}`.
    #[staticmethod]
    #[pyo3(signature = (grid, initial, seed = 0))]
    fn from_initial(grid: PyGrid, initial: &Bound<'_, PyAny>, seed: u64) -> PyResult<Self> {
        let data: InitialData = from_dict(initial)?;
        let spectral = data.build(grid.0, seed).map_err(py_err)?;
        fraclab_core::inverse(&spectral).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        bsvf::read(path.as_ref()).map(Self).map_err(py_err)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        bsvf::write(path.as_ref(), &self.0).map_err(py_err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn mean(&self) -> f64 {
        self.0.values().iter().sum::<f64>() / self.0.values().len() as f64
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }

    fn __repr__(&self) -> String {
        format!("Field(n={}, length={})", self.0.grid().n(), self.0.grid().length())
    }
}

/// The dyadic profile `phi(r)`, supported on `[3/4, 8/3]`.
#[pyfunction]
fn phi(r: f64) -> f64 {
    DyadicProfile::default().phi(r)
}

#[pyfunction]
fn besov_norm<'py>(py: Python<'py>, field: &PyField, s: f64, p: f64, r: f64) -> PyResult<Bound<'py, PyDict>> {
    let params = BesovParams::new(s, p, r).map_err(py_err)?;
    let norm = fraclab_core::besov_norm(&field.0, &params, &DyadicProfile::default()).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", norm.value)?;
    d.set_item("j_min", norm.range.j_min)?;
    d.set_item("j_max", norm.range.j_max)?;
    d.set_item("mean_removed", norm.mean_removed)?;
    Ok(d)
}

#[pyfunction]
fn lebesgue_norm(field: &PyField, p: f64) -> PyResult<f64> {
    Ok(fraclab_core::lebesgue_norm(&field.0, Exponent::new(p).map_err(py_err)?))
}

/// `exp(-t Lambda^alpha) f`.
#[pyfunction]
fn evolve_linear(field: &PyField, alpha: f64, t: f64) -> PyResult<PyField> {
    let u = fraclab_core::evolve_linear(&fraclab_core::forward(&field.0), alpha, t).map_err(py_err)?;
    fraclab_core::inverse(&u).map(PyField).map_err(py_err)
}

/// `(u1, u2) = (-R2 theta, R1 theta)`.
#[pyfunction]
fn sqg_velocity(theta: &PyField) -> PyResult<(PyField, PyField)> {
    let (u1, u2) = fraclab_core::sqg_velocity(&theta.0).map_err(py_err)?;
    Ok((PyField(u1), PyField(u2)))
}

/// `-u . grad theta`, dealiased.
#[pyfunction]
fn sqg_rhs(theta: &PyField) -> PyResult<PyField> {
    fraclab_core::sqg_rhs(&theta.0).map(PyField).map_err(py_err)
}

/// `psi` with `-Laplacian psi = u - mean(u)`.
#[pyfunction]
fn ks_potential(u: &PyField) -> PyResult<PyField> {
    fraclab_core::ks_potential(&u.0).map(PyField).map_err(py_err)
}

/// `-div(u grad psi)`, dealiased.
#[pyfunction]
fn ks_rhs(u: &PyField) -> PyResult<PyField> {
    fraclab_core::ks_rhs(&u.0).map(PyField).map_err(py_err)
}

fn claim(kind: &str, s: f64, ell: f64, alpha: f64, p: f64, r: f64) -> PyResult<DecayClaim> {
    Ok(match kind {
        "linear" => DecayClaim::linear(s, ell, alpha, p),
        "sqg" => DecayClaim::sqg(s, ell, alpha, p, r),
        "keller_segel" | "ks" => DecayClaim::keller_segel(s, ell, p, r),
        "sqg_lebesgue" => DecayClaim::sqg_lebesgue(s, alpha, p, r),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown claim `{other}`; expected linear, sqg, keller_segel or sqg_lebesgue"
            )))
        }
    })
}

/// Predicted decay exponent (negative). `ell` is ignored for `sqg_lebesgue`,
/// `alpha` for `keller_segel` (always 1) and `r` for `linear`.
#[pyfunction]
#[pyo3(signature = (kind, s, ell = 0.0, alpha = 1.0, p = 2.0, r = 2.0))]
fn theoretical_exponent(kind: &str, s: f64, ell: f64, alpha: f64, p: f64, r: f64) -> PyResult<f64> {
    fraclab_core::theoretical_exponent(&claim(kind, s, ell, alpha, p, r)?).map_err(py_err)
}

fn series(times: Vec<f64>, values: Vec<f64>) -> PyResult<NormSeries> {
    NormSeries::new(
        times,
        values,
        SeriesDescriptor {
            label: "python".into(),
            norm: NormKind::Lebesgue {
                p: Exponent::new(2.0).expect("valid"),
            },
            source: "python".into(),
        },
    )
    .map_err(py_err)
}

/// Least-squares slope of `log value` against `log(1 + t)` over `[lo, hi]`.
#[pyfunction]
fn fit_decay_slope<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    lo: f64,
    hi: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let fit = fraclab_core::fit_decay_slope(&series(times, values)?, [lo, hi]).map_err(py_err)?;
    to_py(py, &fit)
}

/// Oracle `B^s_{2,r}` norms of the linear flow from a radial spectral
/// density, e.g. `{"form": "ball_indicator", "radius": 1.0}`.
#[pyfunction]
#[pyo3(signature = (density, s, r, alpha, times, dimension = 2))]
fn oracle_besov_series(
    density: &Bound<'_, PyAny>,
    s: f64,
    r: f64,
    alpha: f64,
    times: Vec<f64>,
    dimension: u32,
) -> PyResult<Vec<f64>> {
    let form: DensityForm = from_dict(density)?;
    let rho = RadialSpectralDensity::new(dimension, form).map_err(py_err)?;
    let params = BesovParams::new(s, 2.0, r).map_err(py_err)?;
    let out = core_oracle_series(&rho, &params, alpha, &times, &DyadicProfile::default()).map_err(py_err)?;
    Ok(out.values().to_vec())
}

#[pyfunction(name = "log_spaced")]
fn py_log_spaced(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    log_spaced(lo, hi, per_decade)
}

/// Runs `model` (`linear`, `sqg` or `ks`) and returns the recorded series,
/// diagnostics and final field. `norms` is a list of `(s, p, r)`.
#[pyfunction]
#[pyo3(signature = (
    model, grid, initial, sample_times, norms, alpha = 1.0, dt = 0.05, seed = 0,
    critical_p = 2.0, smallness_budget = DEFAULT_SMALLNESS_BUDGET
))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    model: &str,
    grid: PyGrid,
    initial: &Bound<'_, PyAny>,
    sample_times: Vec<f64>,
    norms: Vec<(f64, f64, f64)>,
    alpha: f64,
    dt: f64,
    seed: u64,
    critical_p: f64,
    smallness_budget: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let model = match model {
        "linear" => Model::Linear,
        "sqg" => Model::Sqg,
        "ks" | "keller_segel" => Model::KellerSegel,
        other => return Err(PyValueError::new_err(format!("unknown model `{other}`"))),
    };
    let config = RunConfig {
        grid: grid.0,
        alpha,
        dt,
        t_final: sample_times.last().copied().unwrap_or(0.0),
        initial: from_dict(initial)?,
        seed,
        sample_times,
        norms: norms
            .into_iter()
            .map(|(s, p, r)| BesovParams::new(s, p, r))
            .collect::<Result<_, _>>()
            .map_err(py_err)?,
        critical_p,
        smallness_budget,
    };
    let out = py.detach(|| core_run(model, &config)).map_err(py_err)?;
    let d = PyDict::new(py);
    let all = out.series.iter().chain(std::iter::once(&out.l2));
    let series = PyDict::new(py);
    for s in all {
        series.set_item(&s.descriptor.label, (s.times().to_vec(), s.values().to_vec()))?;
    }
    d.set_item("series", series)?;
    d.set_item("diagnostics", to_py(py, &out.diagnostics)?)?;
    d.set_item("config_hash", &out.provenance.config_hash)?;
    d.set_item("final_time", out.final_time)?;
    d.set_item(
        "final_state",
        PyField(fraclab_core::inverse(&out.final_state).map_err(py_err)?),
    )?;
    d.set_item("abort", out.abort.map(|e| e.to_string()))?;
    Ok(d)
}

/// Spectral laboratory for fractional dissipative equations.
#[pymodule]
mod fraclab {
    #[pymodule_export]
    use super::{
        besov_norm, evolve_linear, fit_decay_slope, ks_potential, ks_rhs, lebesgue_norm, oracle_besov_series, phi,
        py_log_spaced, run, sqg_rhs, sqg_velocity, theoretical_exponent, PyField, PyGrid,
    };
}
