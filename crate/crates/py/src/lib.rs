//! Python bindings for the `regiofit` core.
//!
//! Dates cross the boundary as ISO strings (`"2020-03-17"`), regions as
//! integer codes and series as plain lists of floats.

use std::collections::BTreeMap;
use std::sync::Mutex;

use chrono::NaiveDate;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use regiofit::identify::{self as ident, IdentifiedModel, IdentifyError, IdentifyOptions, RegionWeights};
use regiofit::ingest::{read_canonical, write_canonical, CanonicalRecord};
use regiofit::prep::{smooth_values, SmoothingSpec};
use regiofit::torczon::{self, Bounds, MdsConfig};
use regiofit::{dynamics, lagfit, DailySeries, FitWindow, GlobalParams, Indicator, RegionCode, RegionInit};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn date(text: &str) -> PyResult<NaiveDate> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|e| value_err(format!("bad date {text:?}: {e}")))
}

fn region(code: i64) -> PyResult<RegionCode> {
    RegionCode::new(code).map_err(value_err)
}

fn window(start: &str, end: &str) -> PyResult<FitWindow> {
    FitWindow::new(date(start)?, date(end)?).map_err(value_err)
}

fn params(a: f64, u: f64) -> PyResult<GlobalParams> {
    GlobalParams::new(a, u).map_err(value_err)
}

fn series(code: i64, tag: Indicator, start: &str, values: Vec<f64>) -> PyResult<DailySeries> {
    DailySeries::new(region(code)?, tag, date(start)?, values).map_err(value_err)
}

fn identify_err(e: IdentifyError) -> PyErr {
    match e {
        IdentifyError::Solver(_) => PyRuntimeError::new_err(e.to_string()),
        other => value_err(other),
    }
}

/// Runs the recursion for `steps` steps; returns `(f, delta)` with `steps + 1` entries each.
#[pyfunction]
fn simulate(a: f64, u: f64, f0: f64, delta0: f64, steps: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let init = RegionInit::new(f0, delta0).map_err(value_err)?;
    let t = dynamics::simulate(&params(a, u)?, &init, steps).map_err(value_err)?;
    Ok((t.f, t.delta))
}

#[pyfunction]
fn delta_closed_form(a: f64, u: f64, delta0: f64, k: u32) -> PyResult<f64> {
    Ok(dynamics::delta_closed_form(&params(a, u)?, delta0, k))
}

#[pyfunction]
#[pyo3(signature = (a, u, f0, delta0, max_steps=365))]
fn peak_step(a: f64, u: f64, f0: f64, delta0: f64, max_steps: usize) -> PyResult<Option<usize>> {
    let init = RegionInit::new(f0, delta0).map_err(value_err)?;
    Ok(dynamics::peak_step(&params(a, u)?, &init, max_steps))
}

/// `spec` is `<days>:<centered|trailing>`.
#[pyfunction]
#[pyo3(signature = (values, spec="14:centered"))]
fn moving_average(values: Vec<f64>, spec: &str) -> PyResult<Vec<f64>> {
    let spec: SmoothingSpec = spec.parse().map_err(value_err)?;
    Ok(smooth_values(&values, &spec))
}

#[pyfunction]
fn empirical_delta(values: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = series(11, Indicator::MeanExcess20Corr, "2020-01-01", values)?;
    Ok(ident::empirical_delta(&s).map_err(identify_err)?.into_values())
}

fn fitting_data(data: BTreeMap<i64, Vec<f64>>, start: &str) -> PyResult<BTreeMap<RegionCode, DailySeries>> {
    data.into_iter()
        .map(|(code, values)| Ok((region(code)?, series(code, Indicator::MeanExcess20Corr, start, values)?)))
        .collect()
}

/// Pooled growth-rate regression over `{region: f values}`; returns `(a, u, {region: delta0})`.
#[pyfunction]
fn convex_warm_start(data: BTreeMap<i64, Vec<f64>>) -> PyResult<(f64, f64, BTreeMap<u8, f64>)> {
    let deltas = fitting_data(data, "2020-01-01")?
        .into_iter()
        .map(|(r, s)| Ok((r, ident::empirical_delta(&s).map_err(identify_err)?)))
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    let warm = ident::convex_warm_start(&deltas).map_err(identify_err)?;
    let delta0 = warm.delta0.into_iter().map(|(r, d)| (r.code(), d)).collect();
    Ok((warm.params.a, warm.params.u, delta0))
}

/// Result of [`identify`].
#[pyclass(frozen, name = "Model")]
struct PyModel {
    inner: IdentifiedModel,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn a(&self) -> f64 {
        self.inner.params.a
    }

    #[getter]
    fn u(&self) -> f64 {
        self.inner.params.u
    }

    /// `{region: (f0, delta0)}`
    #[getter]
    fn inits(&self) -> BTreeMap<u8, (f64, f64)> {
        self.inner.inits.iter().map(|(r, i)| (r.code(), (i.f0, i.delta0))).collect()
    }

    #[getter]
    fn cost(&self) -> f64 {
        self.inner.cost
    }

    #[getter]
    fn warm_start_cost(&self) -> f64 {
        self.inner.warm_start_cost
    }

    #[getter]
    fn evals(&self) -> usize {
        self.inner.solver_evals
    }

    #[getter]
    fn restarts(&self) -> usize {
        self.inner.restarts
    }

    /// Simulated `{region: (f, delta)}` over `days` days from the window start.
    fn trajectories(&self, days: usize) -> BTreeMap<u8, (Vec<f64>, Vec<f64>)> {
        self.inner
            .trajectories(days)
            .into_iter()
            .map(|(r, (f, d))| (r.code(), (f.into_values(), d.into_values())))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner.to_document()).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc = serde_json::from_str(text).map_err(value_err)?;
        Ok(Self {
            inner: IdentifiedModel::from_document(doc).map_err(identify_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(a={:e}, u={:e}, regions={}, cost={:e})",
            self.inner.params.a,
            self.inner.params.u,
            self.inner.inits.len(),
            self.inner.cost
        )
    }
}

/// Joint fit of `{region: f values}` starting on `start`. `weights` defaults
/// to `1 / max(f)^2` per region.
#[pyfunction]
#[pyo3(signature = (data, start="2020-03-17", weights=None, max_restarts=1000, max_evals=3000))]
fn identify(
    py: Python<'_>,
    data: BTreeMap<i64, Vec<f64>>,
    start: &str,
    weights: Option<BTreeMap<i64, f64>>,
    max_restarts: usize,
    max_evals: usize,
) -> PyResult<PyModel> {
    let data = fitting_data(data, start)?;
    let first = data.values().next().ok_or_else(|| value_err("no regions to fit"))?;
    let w = FitWindow::new(first.start(), first.end()).map_err(value_err)?;
    let weights = match weights {
        None => ident::default_weights(&data).map_err(identify_err)?,
        Some(map) => {
            let map = map.into_iter().map(|(c, q)| Ok((region(c)?, q))).collect::<PyResult<_>>()?;
            RegionWeights::new(map).map_err(identify_err)?
        }
    };
    let defaults = IdentifyOptions::default();
    let options = IdentifyOptions {
        solver: MdsConfig { max_evals, ..defaults.solver.clone() },
        max_restarts,
        ..defaults
    };
    let inner = py
        .detach(|| ident::identify(&data, &w, &weights, &options))
        .map_err(identify_err)?;
    Ok(PyModel { inner })
}

/// Least-squares scale of `h(t) = mu f(t - eta)` over the window; returns `(mu, sse, n_overlap)`.
#[pyfunction]
#[pyo3(signature = (h, h_start, f, f_start, eta, window_start="2020-03-17", window_end="2020-05-31"))]
fn best_mu(
    h: Vec<f64>,
    h_start: &str,
    f: Vec<f64>,
    f_start: &str,
    eta: i32,
    window_start: &str,
    window_end: &str,
) -> PyResult<(f64, f64, usize)> {
    let h = series(11, Indicator::IncidHosp, h_start, h)?;
    let f = series(11, Indicator::Fhat, f_start, f)?;
    let fit = lagfit::best_mu(&h, &f, eta, &window(window_start, window_end)?).map_err(value_err)?;
    Ok((fit.mu, fit.sse, fit.n_overlap))
}

/// Best integer lag and its scale; returns `(eta, mu, sse, n_overlap)`.
#[pyfunction]
#[pyo3(signature = (h, h_start, f, f_start, eta_min=-10, eta_max=15, window_start="2020-03-17", window_end="2020-05-31"))]
#[allow(clippy::too_many_arguments)]
fn fit_lag_scale(
    h: Vec<f64>,
    h_start: &str,
    f: Vec<f64>,
    f_start: &str,
    eta_min: i32,
    eta_max: i32,
    window_start: &str,
    window_end: &str,
) -> PyResult<(i32, f64, f64, usize)> {
    let h = series(11, Indicator::IncidHosp, h_start, h)?;
    let f = series(11, Indicator::Fhat, f_start, f)?;
    let spec = lagfit::LagSearchSpec {
        eta_min,
        eta_max,
        window: window(window_start, window_end)?,
    };
    let fit = lagfit::fit_lag_scale(&h, &f, &spec).map_err(value_err)?;
    Ok((fit.eta, fit.mu, fit.sse, fit.n_overlap))
}

/// Multidirectional search on a Python callable `func(list[float]) -> float`.
/// Returns a dict with `x`, `cost`, `evals`, `iterations` and `stop_reason`.
#[pyfunction]
#[pyo3(signature = (func, x0, lower=None, upper=None, max_evals=200_000, size_tol=1e-8, expansion=2.0, contraction=0.5))]
#[allow(clippy::too_many_arguments)]
fn minimize<'py>(
    py: Python<'py>,
    func: Py<PyAny>,
    x0: Vec<f64>,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    max_evals: usize,
    size_tol: f64,
    expansion: f64,
    contraction: f64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let n = x0.len();
    let bounds = Bounds::new(
        lower.unwrap_or_else(|| vec![f64::NEG_INFINITY; n]),
        upper.unwrap_or_else(|| vec![f64::INFINITY; n]),
    )
    .map_err(value_err)?;
    let cfg = MdsConfig {
        expansion,
        contraction,
        size_tol,
        max_evals,
        ..MdsConfig::default()
    };
    let failure: Mutex<Option<PyErr>> = Mutex::new(None);
    let objective = |x: &[f64]| {
        if failure.lock().unwrap().is_some() {
            return f64::INFINITY;
        }
        Python::attach(|py| match func.call1(py, (x.to_vec(),)).and_then(|v| v.extract::<f64>(py)) {
            Ok(v) => v,
            Err(e) => {
                *failure.lock().unwrap() = Some(e);
                f64::INFINITY
            }
        })
    };
    let result = torczon::minimize(objective, &x0, &bounds, &cfg);
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let r = result.map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("x", r.x_best)?;
    out.set_item("cost", r.cost_best)?;
    out.set_item("evals", r.evals)?;
    out.set_item("iterations", r.iterations)?;
    out.set_item("stop_reason", format!("{:?}", r.stop_reason))?;
    Ok(out)
}

/// Reads a canonical CSV file into `(region, indicator, date, value)` tuples.
#[pyfunction]
fn read_canonical_csv(path: &str) -> PyResult<Vec<(u8, String, String, f64)>> {
    let bytes = std::fs::read(path).map_err(|e| value_err(format!("{path}: {e}")))?;
    let records = read_canonical(&bytes).map_err(|e| value_err(format!("{path}: {e}")))?;
    Ok(records
        .into_iter()
        .map(|r| (r.region.code(), r.indicator.to_string(), r.date.to_string(), r.value))
        .collect())
}

/// Writes `(region, indicator, date, value)` tuples as canonical CSV.
#[pyfunction]
fn write_canonical_csv(path: &str, records: Vec<(i64, String, String, f64)>) -> PyResult<()> {
    let records = records
        .into_iter()
        .map(|(code, tag, day, value)| {
            Ok(CanonicalRecord {
                region: region(code)?,
                indicator: tag.parse().map_err(value_err)?,
                date: date(&day)?,
                value,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    std::fs::write(path, write_canonical(&records)).map_err(|e| value_err(format!("{path}: {e}")))
}

#[pymodule]
fn pyregiofit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(delta_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(peak_step, m)?)?;
    m.add_function(wrap_pyfunction!(moving_average, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_delta, m)?)?;
    m.add_function(wrap_pyfunction!(convex_warm_start, m)?)?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(best_mu, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lag_scale, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(read_canonical_csv, m)?)?;
    m.add_function(wrap_pyfunction!(write_canonical_csv, m)?)?;
    Ok(())
}
