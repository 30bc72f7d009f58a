//! Python bindings: draw vectors, score configuration, thresholds, the
//! sliding calibration window, interval inversion, metrics and full runs.

use dcp_core::pipeline::DrawRecord;
use dcp_core::scenario::{build_scenario, ScenarioSpec};
use dcp_core::scores::ScoreFn;
use dcp_core::{
    analytic_interval, conformal_interval, evaluate, CalibrationWindow as CoreWindow, Config as CoreConfig, DcpError,
    DrawVector as CoreDraws, EvaluationReport, Inversion, PredictionInterval, SampleEval, ScoreFamily,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(dcp, DcpException, PyValueError, "Invalid input or configuration.");
create_exception!(dcp, InsufficientCalibration, DcpException, "Too few calibration scores for the requested alpha.");

fn to_py(e: DcpError) -> PyErr {
    match e {
        DcpError::InsufficientCalibration { .. } => InsufficientCalibration::new_err(e.to_string()),
        _ => DcpException::new_err(e.to_string()),
    }
}

/// Predictive draws with cached summary statistics.
#[pyclass(name = "DrawVector", frozen)]
struct DrawVector(CoreDraws);

#[pymethods]
impl DrawVector {
    #[new]
    fn new(draws: Vec<f64>) -> PyResult<Self> {
        CoreDraws::new(draws).map(Self).map_err(to_py)
    }

    #[getter]
    fn draws(&self) -> Vec<f64> {
        self.0.draws().to_vec()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    #[getter]
    fn std(&self) -> f64 {
        self.0.std()
    }

    #[getter]
    fn median(&self) -> f64 {
        self.0.median()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("DrawVector(m={}, mean={}, std={})", self.0.len(), self.0.mean(), self.0.std())
    }
}

/// Run configuration. Keyword arguments override the defaults.
#[pyclass(name = "Config")]
struct Config(CoreConfig);

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (alpha=0.1, score="residual", scaled=false, k=10, online=false, zeta=1.645, kappa=2.0, normalize=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha: f64,
        score: &str,
        scaled: bool,
        k: usize,
        online: bool,
        zeta: f64,
        kappa: f64,
        normalize: bool,
    ) -> PyResult<Self> {
        let mut cfg = CoreConfig::default();
        cfg.set_alpha(alpha);
        cfg.score.family = score.parse::<ScoreFamily>().map_err(to_py)?;
        cfg.score.scaled = scaled;
        cfg.score.k = k;
        cfg.online = online;
        cfg.zeta = zeta;
        cfg.kappa = kappa;
        cfg.normalize_by_range = normalize;
        cfg.validate().map_err(to_py)?;
        Ok(Self(cfg))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreConfig::from_json_str(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| DcpException::new_err(e.to_string()))
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn score(&self) -> &'static str {
        self.0.score.family.as_str()
    }

    #[getter]
    fn scaled(&self) -> bool {
        self.0.score.scaled
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.score.k
    }

    #[getter]
    fn online(&self) -> bool {
        self.0.online
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(alpha={}, score='{}', scaled={}, k={}, online={})",
            self.0.alpha,
            self.0.score.family,
            self.0.score.scaled,
            self.0.score.k,
            self.0.online
        )
    }
}

fn config_or_default(config: Option<&Config>) -> CoreConfig {
    config.map(|c| c.0.clone()).unwrap_or_default()
}

/// Sliding window of calibration scores; each update evicts the oldest.
#[pyclass(name = "CalibrationWindow")]
struct CalibrationWindow(CoreWindow);

#[pymethods]
impl CalibrationWindow {
    #[new]
    #[pyo3(signature = (scores, alpha=0.1))]
    fn new(scores: Vec<f64>, alpha: f64) -> PyResult<Self> {
        CoreWindow::new(&scores, alpha).map(Self).map_err(to_py)
    }

    fn update(&mut self, score: f64) -> PyResult<f64> {
        self.0.update(score).map_err(to_py)?;
        Ok(self.0.qhat())
    }

    #[getter]
    fn qhat(&self) -> f64 {
        self.0.qhat()
    }

    #[getter]
    fn capacity(&self) -> usize {
        self.0.capacity()
    }

    #[getter]
    fn scores(&self) -> Vec<f64> {
        self.0.scores().collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// The ceil((n + 1)(1 - alpha))-th smallest score.
#[pyfunction]
#[pyo3(signature = (scores, alpha=0.1))]
fn threshold(scores: Vec<f64>, alpha: f64) -> PyResult<f64> {
    dcp_core::threshold(&scores, alpha).map_err(to_py)
}

/// Nonconformity score of `y` under the configured family.
#[pyfunction]
#[pyo3(signature = (y, draws, config=None))]
fn score(y: f64, draws: &DrawVector, config: Option<&Config>) -> PyResult<f64> {
    let cfg = config_or_default(config);
    Ok(ScoreFn::new(&cfg.score, &draws.0).map_err(to_py)?.eval(y))
}

fn interval_tuple(iv: PredictionInterval) -> (f64, f64, &'static str) {
    (iv.low, iv.up, iv.status.as_str())
}

/// Conformal interval `(low, up, status)` for one draw vector.
#[pyfunction]
#[pyo3(signature = (draws, qhat, config=None, analytic=false))]
fn interval(draws: &DrawVector, qhat: f64, config: Option<&Config>, analytic: bool) -> PyResult<(f64, f64, &'static str)> {
    let cfg = config_or_default(config);
    let score = ScoreFn::new(&cfg.score, &draws.0).map_err(to_py)?;
    let iv = if analytic {
        analytic_interval(&score, qhat).map_err(to_py)?
    } else {
        conformal_interval(&score, qhat, &cfg.root)
    };
    Ok(interval_tuple(iv))
}

fn report_dict<'py>(py: Python<'py>, r: &EvaluationReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    for (name, value) in [
        ("picp", r.picp),
        ("c_a", r.c_a),
        ("pinaw", r.pinaw),
        ("cv_width", r.cv_width),
        ("mean_winkler", r.mean_winkler),
        ("p_uc", r.p_uc),
        ("mmw", r.mmw),
        ("xi", r.xi),
    ] {
        d.set_item(name, value)?;
    }
    Ok(d)
}

/// Metric report for targets and interval bounds of equal length.
#[pyfunction]
#[pyo3(signature = (y, low, up, config=None))]
fn metrics<'py>(py: Python<'py>, y: Vec<f64>, low: Vec<f64>, up: Vec<f64>, config: Option<&Config>) -> PyResult<Bound<'py, PyDict>> {
    if y.len() != low.len() || y.len() != up.len() {
        return Err(DcpException::new_err("y, low and up must have equal length"));
    }
    let cfg = config_or_default(config);
    let samples: Vec<SampleEval> = (0..y.len()).map(|i| SampleEval::new(y[i], low[i], up[i], cfg.alpha)).collect();
    let report = evaluate(&samples, &cfg.metric_params()).map_err(to_py)?;
    report_dict(py, &report)
}

fn extract_records(items: &[Bound<'_, PyAny>]) -> PyResult<Vec<DrawRecord>> {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let id = match item.get_item("id") {
                Ok(v) if !v.is_none() => v.str()?.to_string(),
                _ => i.to_string(),
            };
            let y = match item.get_item("y") {
                Ok(v) if !v.is_none() => Some(v.extract::<f64>()?),
                _ => None,
            };
            let draws: Vec<f64> = item
                .get_item("draws")
                .map_err(|_| DcpException::new_err(format!("record {i}: missing `draws`")))?
                .extract()?;
            Ok(DrawRecord::new(id, y, draws))
        })
        .collect()
}

fn record_dicts<'py>(py: Python<'py>, records: &[DrawRecord]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("id", &r.id)?;
            d.set_item("y", r.y)?;
            d.set_item("draws", &r.draws)?;
            Ok(d)
        })
        .collect()
}

/// Calibrates on `calib` and predicts `test`. Records are mappings with
/// `draws`, and optionally `id` and `y`. Returns a dict with `rows`,
/// `initial_qhat` and `report`.
#[pyfunction]
#[pyo3(signature = (calib, test, config=None, analytic=false))]
fn run<'py>(
    py: Python<'py>,
    calib: Vec<Bound<'py, PyAny>>,
    test: Vec<Bound<'py, PyAny>>,
    config: Option<&Config>,
    analytic: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config_or_default(config);
    let (calib, test) = (extract_records(&calib)?, extract_records(&test)?);
    let inversion = if analytic { Inversion::Analytic } else { Inversion::Numeric };
    let out = py
        .detach(|| dcp_core::run(&calib, &test, &cfg, inversion))
        .map_err(to_py)?;

    let rows = out
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("id", &r.id)?;
            d.set_item("y", r.y)?;
            d.set_item("low", r.interval.map(|iv| iv.low))?;
            d.set_item("up", r.interval.map(|iv| iv.up))?;
            d.set_item("status", r.interval.map_or("error", |iv| iv.status.as_str()))?;
            d.set_item("qhat", r.qhat)?;
            d.set_item("error", r.error.as_deref())?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let result = PyDict::new(py);
    result.set_item("rows", rows)?;
    result.set_item("initial_qhat", out.initial_qhat)?;
    result.set_item("report", report_dict(py, &out.report)?)?;
    Ok(result)
}

/// Synthetic benchmark (`aleatoric`, `epistemic` or `epistemic_aware`) as a
/// dict with `calib` and `test` record lists.
#[pyfunction]
#[pyo3(signature = (preset="aleatoric", seed=0))]
fn synth<'py>(py: Python<'py>, preset: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let spec = ScenarioSpec::preset(preset).map_err(to_py)?;
    let sc = py.detach(|| build_scenario(&spec, seed)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("calib", record_dicts(py, &sc.calib)?)?;
    d.set_item("test", record_dicts(py, &sc.test)?)?;
    Ok(d)
}

#[pymodule]
fn dcp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DrawVector>()?;
    m.add_class::<Config>()?;
    m.add_class::<CalibrationWindow>()?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(interval, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add("DcpException", m.py().get_type::<DcpException>())?;
    m.add("InsufficientCalibration", m.py().get_type::<InsufficientCalibration>())?;
    Ok(())
}
