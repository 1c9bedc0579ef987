//! Python module `riskmon`: trackers, single-stream monitoring and
//! experiment sweeps from the Rust core.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use riskmon_core::experiment::{run_experiment, write_bundle, ExperimentConfig};
use riskmon_core::{
    parse, run_monitor, BettingStrategy, LossRecord, MonitorOptions, RiskSpec, StepInput, ThresholdGrid,
    TrackerKind, WindowConfig,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind_of(name: &str) -> PyResult<TrackerKind> {
    name.parse().map_err(err)
}

fn strategy_of(kind: TrackerKind, strategy: Option<&str>) -> PyResult<BettingStrategy> {
    strategy.map_or(Ok(kind.default_strategy()), |s| parse::strategy(s).map_err(err))
}

fn window_of(window: Option<usize>, batch: usize, burn_in: Option<usize>) -> PyResult<WindowConfig> {
    let w = WindowConfig::new(window, batch).map_err(err)?;
    Ok(match burn_in {
        Some(b) => w.with_burn_in(b),
        None => w,
    })
}

/// One tracker for a single threshold, stepped one loss batch at a time.
#[pyclass(name = "Tracker", module = "riskmon")]
struct PyTracker {
    inner: riskmon_core::Tracker,
    spec: RiskSpec,
}

#[pymethods]
impl PyTracker {
    #[new]
    #[pyo3(signature = (kind, epsilon = 0.1, delta = 0.1, strategy = None, window = None, batch = 1, burn_in = None))]
    fn new(
        kind: &str,
        epsilon: f64,
        delta: f64,
        strategy: Option<&str>,
        window: Option<usize>,
        batch: usize,
        burn_in: Option<usize>,
    ) -> PyResult<Self> {
        let spec = RiskSpec::new(epsilon, delta).map_err(err)?;
        let kind = kind_of(kind)?;
        let inner = riskmon_core::Tracker::new(kind, strategy_of(kind, strategy)?, &spec,
            &window_of(window, batch, burn_in)?)
        .map_err(err)?;
        Ok(Self { inner, spec })
    }

    /// Consumes one batch of losses in [0, 1].
    fn step(&mut self, losses: Vec<f64>) -> PyResult<()> {
        self.inner.step(&self.spec, &losses).map_err(err)
    }

    /// Bet the next step will place.
    fn next_rate(&self) -> f64 {
        self.inner.next_rate(&self.spec)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.state().kind().name()
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.state().t()
    }

    /// Log-wealth for wealth trackers, the risk estimate otherwise.
    #[getter]
    fn value(&self) -> f64 {
        self.inner.state().value()
    }

    #[getter]
    fn stopped(&self) -> bool {
        self.inner.state().stopped()
    }

    #[getter]
    fn stop_time(&self) -> Option<usize> {
        self.inner.state().stop_time()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.state();
        format!("Tracker(kind={}, t={}, value={:.6}, stopped={})", s.kind().name(), s.t(), s.value(), s.stopped())
    }
}

/// Per-threshold outcome of [`monitor`].
#[pyclass(name = "MonitorResult", module = "riskmon", get_all)]
struct PyMonitorResult {
    tracker: String,
    /// Confidence-set size after each step.
    cs_sizes: Vec<usize>,
    /// Stopping step per threshold, `None` if never stopped.
    tau: Vec<Option<usize>>,
    /// First step whose risk exceeds epsilon, when `risk` was given.
    tau_star: Vec<Option<usize>>,
    false_alarm: Vec<bool>,
    final_values: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn monitor_impl(
    losses: Vec<Vec<Vec<f64>>>,
    risk: Option<Vec<Vec<f64>>>,
    kind: &str,
    epsilon: f64,
    delta: f64,
    strategy: Option<&str>,
    window: Option<usize>,
    burn_in: Option<usize>,
) -> PyResult<PyMonitorResult> {
    let horizon = losses.len();
    let thresholds = losses.first().map_or(0, Vec::len);
    let batch = losses.first().and_then(|s| s.first()).map_or(1, Vec::len);
    let spec = RiskSpec::new(epsilon, delta).map_err(err)?;
    let grid = ThresholdGrid::linspace(0.0, 1.0, thresholds.max(1)).map_err(err)?;
    if let Some(r) = &risk {
        if r.len() != horizon {
            return Err(err(format!("risk has {} steps, losses have {horizon}", r.len())));
        }
    }
    let steps = losses.into_iter().enumerate().map(|(i, values)| {
        let record = LossRecord::new(i + 1, values)?;
        Ok(match &risk {
            Some(r) => StepInput { record, truth: riskmon_core::Truth::Risk(r[i].clone()) },
            None => StepInput::unlabelled(record),
        })
    });
    let kind = kind_of(kind)?;
    let run = run_monitor(&grid, &spec, &window_of(window, batch, burn_in)?, kind, strategy_of(kind, strategy)?,
        steps, horizon, MonitorOptions::default())
    .map_err(err)?;
    Ok(PyMonitorResult {
        tracker: kind.name().to_string(),
        cs_sizes: run.cs_sizes(),
        tau: run.records.iter().map(|r| r.tau).collect(),
        tau_star: run.records.iter().map(|r| r.tau_star).collect(),
        false_alarm: run.records.iter().map(|r| r.false_alarm).collect(),
        final_values: run.final_states.iter().map(|s| s.value()).collect(),
    })
}

/// Runs one tracker kind over a stream of losses indexed `[t][threshold][b]`.
/// `risk[t][threshold]`, if given, supplies the true risk for delays.
#[pyfunction]
#[pyo3(signature = (losses, kind = "wealth_mult", epsilon = 0.1, delta = 0.1, strategy = None, window = None, burn_in = None, risk = None))]
#[allow(clippy::too_many_arguments)]
fn monitor(
    losses: Vec<Vec<Vec<f64>>>,
    kind: &str,
    epsilon: f64,
    delta: f64,
    strategy: Option<&str>,
    window: Option<usize>,
    burn_in: Option<usize>,
    risk: Option<Vec<Vec<f64>>>,
) -> PyResult<PyMonitorResult> {
    monitor_impl(losses, risk, kind, epsilon, delta, strategy, window, burn_in)
}

/// One row of a sweep summary.
#[pyclass(name = "SummaryRow", module = "riskmon", get_all)]
struct PySummaryRow {
    window: Option<usize>,
    batch: usize,
    tracker: String,
    strategy: String,
    trials: usize,
    delay_mean: Option<f64>,
    delay_sd: Option<f64>,
    delay_count: usize,
    missed: usize,
    false_alarms: usize,
    fp_positive: f64,
    fp_above_delta: f64,
}

#[pymethods]
impl PySummaryRow {
    fn __repr__(&self) -> String {
        format!(
            "SummaryRow(window={:?}, batch={}, tracker={}, delay_mean={:?}, fp_positive={:.4})",
            self.window, self.batch, self.tracker, self.delay_mean, self.fp_positive
        )
    }
}

fn sweep_impl(config: &str, out: Option<&str>) -> PyResult<Vec<PySummaryRow>> {
    let cfg = ExperimentConfig::from_toml_str(config).map_err(err)?;
    let res = run_experiment(&cfg).map_err(err)?;
    if let Some(dir) = out {
        write_bundle(&res, dir).map_err(err)?;
    }
    Ok(res
        .summary()
        .map_err(err)?
        .into_iter()
        .map(|r| PySummaryRow {
            window: r.window.0,
            batch: r.batch,
            tracker: r.tracker,
            strategy: r.strategy,
            trials: r.trials,
            delay_mean: r.delay.mean,
            delay_sd: r.delay.sd,
            delay_count: r.delay.count,
            missed: r.delay.missed,
            false_alarms: r.delay.false_alarms,
            fp_positive: r.fp_positive,
            fp_above_delta: r.fp_above_delta,
        })
        .collect())
}

/// Runs an experiment from TOML config text; optionally writes a bundle.
#[pyfunction]
#[pyo3(signature = (config = "", out = None))]
fn sweep(py: Python<'_>, config: &str, out: Option<&str>) -> PyResult<Vec<PySummaryRow>> {
    py.detach(|| sweep_impl(config, out))
}

/// Hash identifying the experiment a TOML config describes.
#[pyfunction]
fn config_hash(config: &str) -> PyResult<String> {
    Ok(ExperimentConfig::from_toml_str(config).map_err(err)?.hash())
}

#[pymodule]
fn riskmon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTracker>()?;
    m.add_class::<PyMonitorResult>()?;
    m.add_class::<PySummaryRow>()?;
    m.add_function(wrap_pyfunction!(monitor, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add("TRACKERS", TrackerKind::ALL.map(TrackerKind::name).to_vec())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monitor_all_ones_stops() {
        let losses = vec![vec![vec![1.0]; 2]; 10];
        let res = monitor_impl(losses, None, "wealth_mult", 0.1, 0.1, Some("fixed:0.5"), None, Some(0)).unwrap();
        assert_eq!(res.tau, vec![Some(7), Some(7)]);
        assert_eq!(res.cs_sizes[5], 2);
        assert_eq!(res.cs_sizes[6], 0);
    }

    #[test]
    fn monitor_rejects_ragged_truth() {
        let losses = vec![vec![vec![0.0]]; 3];
        assert!(monitor_impl(losses, Some(vec![vec![0.0]]), "wealth_mult", 0.1, 0.1, None, None, None).is_err());
    }

    #[test]
    fn sweep_from_toml() {
        let cfg = "trials = 2\nhorizon = 50\nwindows = [\"none\"]\nbatches = [1]\n[grid]\nlo = 0.0\nhi = 1.0\npoints = 3\n";
        let rows = sweep_impl(cfg, None).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(sweep_impl("bogus_field = 1", None).is_err());
    }
}
