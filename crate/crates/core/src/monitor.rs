//! Runs one tracker per threshold over a loss stream, maintains the
//! confidence set and reduces stop times to delay and false-alarm records.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betting::{BettingStrategy, Direction};
use crate::error::{Error, Result};
use crate::seeds::derive_seed;
use crate::streams::{BernoulliStream, StepInput, Truth};
use crate::trackers::{Tracker, TrackerKind, TrackerState};
use crate::types::{RiskSpec, ThresholdGrid, WindowConfig};

/// Thresholds still in the set at time `t`, as indices into the grid.
///
/// Forward trackers keep every threshold not yet rejected. The reverse
/// i.i.d. tracker keeps the thresholds it has certified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub t: usize,
    pub members: Vec<usize>,
}

impl ConfidenceSet {
    /// The set before any data: every threshold for forward trackers,
    /// none for the reverse tracker.
    pub fn initial(grid_len: usize, direction: Direction) -> Self {
        let members = match direction {
            Direction::Violation => (0..grid_len).collect(),
            Direction::Control => Vec::new(),
        };
        Self { t: 0, members }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.binary_search(&k).is_ok()
    }

    pub fn is_subset_of(&self, other: &ConfidenceSet) -> bool {
        self.members.iter().all(|&k| other.contains(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRecord {
    pub psi: f64,
    /// First step at which the true risk exceeds `epsilon`.
    pub tau_star: Option<usize>,
    /// Step at which the tracker stopped.
    pub tau: Option<usize>,
    pub delay: Option<i64>,
    pub censored: bool,
    pub false_alarm: bool,
}

impl StoppingRecord {
    /// Record of a forward tracker. Without ground truth no stop can be
    /// judged a false alarm.
    pub fn forward(psi: f64, tau_star: Option<usize>, tau: Option<usize>, truth_known: bool) -> Self {
        let delay = match (tau, tau_star) {
            (Some(a), Some(b)) => Some(a as i64 - b as i64),
            _ => None,
        };
        let false_alarm = truth_known && tau.is_some() && (tau_star.is_none() || delay.is_some_and(|d| d < 0));
        Self {
            psi,
            tau_star,
            tau,
            delay,
            censored: tau.is_none(),
            false_alarm,
        }
    }
}

/// One tracker kind and the strategy that drives it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerSpec {
    pub kind: TrackerKind,
    pub strategy: BettingStrategy,
}

impl TrackerSpec {
    pub fn new(kind: TrackerKind, strategy: BettingStrategy) -> Self {
        Self { kind, strategy }
    }

    pub fn with_default_strategy(kind: TrackerKind) -> Self {
        Self::new(kind, kind.default_strategy())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonitorOptions {
    /// Keep per-step values and stop flags of every threshold.
    pub keep_values: bool,
}

/// Value and stop flag of every threshold at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepValues {
    pub values: Vec<f64>,
    pub stopped: Vec<bool>,
}

/// Output of one tracker over one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRun {
    pub tracker: TrackerSpec,
    /// One entry per step `t = 1..=T`.
    pub trace: Vec<ConfidenceSet>,
    pub records: Vec<StoppingRecord>,
    pub values: Option<Vec<StepValues>>,
    pub final_states: Vec<TrackerState>,
}

impl MonitorRun {
    pub fn cs_sizes(&self) -> Vec<usize> {
        self.trace.iter().map(ConfidenceSet::size).collect()
    }
}

struct Lane {
    spec: TrackerSpec,
    trackers: Vec<Tracker>,
    trace: Vec<ConfidenceSet>,
    values: Option<Vec<StepValues>>,
    // Reverse tracker only: whether each threshold violated at its entry.
    entered_violating: Vec<bool>,
}

/// Runs a single tracker kind; see [`run_monitors`].
#[allow(clippy::too_many_arguments)]
pub fn run_monitor<I>(
    grid: &ThresholdGrid,
    spec: &RiskSpec,
    window: &WindowConfig,
    kind: TrackerKind,
    strategy: BettingStrategy,
    stream: I,
    horizon: usize,
    options: MonitorOptions,
) -> Result<MonitorRun>
where
    I: IntoIterator<Item = Result<StepInput>>,
{
    let mut runs = run_monitors(grid, spec, window, &[TrackerSpec::new(kind, strategy)], stream, horizon, options)?;
    Ok(runs.remove(0))
}

/// Steps every tracker in `trackers` for each threshold through the first
/// `horizon` steps of `stream`.
///
/// The true violation time of a threshold is the first step whose exact
/// risk exceeds `epsilon`, or the first flag of an oracle estimator fed the
/// stream's oracle batches.
pub fn run_monitors<I>(
    grid: &ThresholdGrid,
    spec: &RiskSpec,
    window: &WindowConfig,
    trackers: &[TrackerSpec],
    stream: I,
    horizon: usize,
    options: MonitorOptions,
) -> Result<Vec<MonitorRun>>
where
    I: IntoIterator<Item = Result<StepInput>>,
{
    if trackers.is_empty() {
        return Err(Error::Empty("tracker list"));
    }
    let n = grid.len();
    let mut lanes = trackers
        .iter()
        .map(|&ts| {
            let trackers = (0..n)
                .map(|_| Tracker::new(ts.kind, ts.strategy, spec, window))
                .collect::<Result<Vec<_>>>()?;
            Ok(Lane {
                spec: ts,
                trackers,
                trace: Vec::with_capacity(horizon),
                values: options.keep_values.then(|| Vec::with_capacity(horizon)),
                entered_violating: vec![false; n],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut oracle: Option<Vec<Tracker>> = None;
    let mut tau_star: Vec<Option<usize>> = vec![None; n];
    let mut truth_known = true;
    let mut violating = vec![false; n];
    let mut stream = stream.into_iter();

    for t in 1..=horizon {
        let step = match stream.next() {
            Some(step) => step?,
            None => {
                return Err(Error::StreamTruncated {
                    available: t - 1,
                    horizon,
                })
            }
        };
        let record = &step.record;
        if record.values.len() != n {
            return Err(Error::GridMismatch {
                expected: n,
                actual: record.values.len(),
            });
        }
        if record.t != t {
            return Err(Error::Parse {
                line: 0,
                message: format!("stream step {t} carries time index {}", record.t),
            });
        }
        if record.batch_size() != window.batch {
            return Err(Error::BatchMismatch {
                t,
                expected: window.batch,
                actual: record.batch_size(),
            });
        }

        match &step.truth {
            Truth::Unknown => {
                truth_known = false;
                violating.iter_mut().for_each(|v| *v = false);
            }
            Truth::Risk(risk) => {
                if risk.len() != n {
                    return Err(Error::GridMismatch {
                        expected: n,
                        actual: risk.len(),
                    });
                }
                for k in 0..n {
                    violating[k] = risk[k] > spec.epsilon();
                }
            }
            Truth::Oracle(batches) => {
                if batches.len() != n {
                    return Err(Error::GridMismatch {
                        expected: n,
                        actual: batches.len(),
                    });
                }
                let oracles = match &mut oracle {
                    Some(o) => o,
                    None => oracle.insert(
                        (0..n)
                            .map(|_| Tracker::new(TrackerKind::OracleRisk, BettingStrategy::Agra, spec, window))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                };
                for k in 0..n {
                    oracles[k].step(spec, &batches[k])?;
                    violating[k] = oracles[k].state().value() > spec.epsilon();
                }
            }
        }
        for k in 0..n {
            if tau_star[k].is_none() && violating[k] {
                tau_star[k] = Some(t);
            }
        }

        for lane in &mut lanes {
            let direction = lane.spec.kind.direction();
            for (k, tracker) in lane.trackers.iter_mut().enumerate() {
                let was_stopped = tracker.state().stopped();
                tracker.step(spec, &record.values[k])?;
                if !was_stopped && tracker.state().stopped() && direction == Direction::Control {
                    lane.entered_violating[k] = violating[k];
                }
            }
            let members: Vec<usize> = lane
                .trackers
                .iter()
                .enumerate()
                .filter(|(_, tr)| match direction {
                    Direction::Violation => !tr.state().stopped(),
                    Direction::Control => tr.state().stopped(),
                })
                .map(|(k, _)| k)
                .collect();
            lane.trace.push(ConfidenceSet { t, members });
            if let Some(values) = &mut lane.values {
                values.push(StepValues {
                    values: lane.trackers.iter().map(|tr| tr.state().value()).collect(),
                    stopped: lane.trackers.iter().map(|tr| tr.state().stopped()).collect(),
                });
            }
        }
    }

    Ok(lanes
        .into_iter()
        .map(|lane| {
            let records = grid
                .values()
                .iter()
                .enumerate()
                .map(|(k, &psi)| {
                    let tau = lane.trackers[k].state().stop_time();
                    let mut rec = StoppingRecord::forward(psi, tau_star[k], tau, truth_known);
                    if lane.spec.kind.direction() == Direction::Control {
                        // Certifying a threshold that violates is the error here.
                        rec.false_alarm = truth_known && tau.is_some() && lane.entered_violating[k];
                    }
                    rec
                })
                .collect();
            MonitorRun {
                tracker: lane.spec,
                trace: lane.trace,
                records,
                values: lane.values,
                final_states: lane.trackers.into_iter().map(|tr| tr.state().clone()).collect(),
            }
        })
        .collect())
}

/// Per-threshold false-alarm frequency over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalseAlarmRates {
    pub psi: Vec<f64>,
    pub rate: Vec<f64>,
    pub trials: usize,
    /// Fraction of thresholds with a nonzero rate.
    pub frac_positive: f64,
    /// Fraction of thresholds whose rate exceeds `delta`.
    pub frac_above_delta: f64,
}

/// `rate(psi) = (1/R) sum_r 1[false alarm in trial r]`.
pub fn false_alarm_rate(trials: &[Vec<StoppingRecord>], delta: f64) -> Result<FalseAlarmRates> {
    let first = trials.first().ok_or(Error::Empty("trial list"))?;
    let psi: Vec<f64> = first.iter().map(|r| r.psi).collect();
    if psi.is_empty() {
        return Err(Error::Empty("threshold grid"));
    }
    let mut counts = vec![0usize; psi.len()];
    for records in trials {
        if records.len() != psi.len() {
            return Err(Error::GridMismatch {
                expected: psi.len(),
                actual: records.len(),
            });
        }
        for (k, r) in records.iter().enumerate() {
            if r.psi != psi[k] {
                return Err(Error::Grid(format!(
                    "trial grids differ at index {k}: {} vs {}",
                    psi[k], r.psi
                )));
            }
            counts[k] += usize::from(r.false_alarm);
        }
    }
    let r = trials.len() as f64;
    let rate: Vec<f64> = counts.iter().map(|&c| c as f64 / r).collect();
    let m = rate.len() as f64;
    Ok(FalseAlarmRates {
        frac_positive: rate.iter().filter(|&&x| x > 0.0).count() as f64 / m,
        frac_above_delta: rate.iter().filter(|&&x| x > delta).count() as f64 / m,
        psi,
        rate,
        trials: trials.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySummary {
    /// Records whose nonnegative delay entered the mean.
    pub count: usize,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub sd: Option<f64>,
    /// Records without a stop by the horizon.
    pub censored: usize,
    /// Records whose threshold violated but never stopped.
    pub missed: usize,
    pub false_alarms: usize,
    pub total: usize,
}

/// Mean and spread of nonnegative delays. False alarms and censored records
/// are counted but never enter the mean.
pub fn delay_summary<'a>(records: impl IntoIterator<Item = &'a StoppingRecord>) -> DelaySummary {
    let mut delays = Vec::new();
    let (mut censored, mut missed, mut false_alarms, mut total) = (0, 0, 0, 0);
    for r in records {
        total += 1;
        censored += usize::from(r.censored);
        missed += usize::from(r.censored && r.tau_star.is_some());
        false_alarms += usize::from(r.false_alarm);
        if let Some(d) = r.delay.filter(|&d| d >= 0) {
            delays.push(d as f64);
        }
    }
    let (mean, sd) = if delays.is_empty() {
        (None, None)
    } else {
        let n = delays.len() as f64;
        let mean = delays.iter().sum::<f64>() / n;
        let var = delays.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    DelaySummary {
        count: delays.len(),
        mean,
        sd,
        censored,
        missed,
        false_alarms,
        total,
    }
}

/// Changepoint experiment for one threshold and a fixed bet: mean
/// `pre_mean` up to `t_shift`, then `epsilon + mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayExperiment {
    pub lambda: f64,
    pub mu: f64,
    pub t_shift: usize,
    pub pre_mean: f64,
    pub trials: usize,
    pub horizon: usize,
    pub burn_in: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBoundReport {
    /// `(log(1/delta) + t_shift lambda epsilon) / (lambda mu)`.
    pub predicted: f64,
    pub observed: DelaySummary,
    /// Observed mean delay over the prediction.
    pub ratio: Option<f64>,
}

/// Simulates [`DelayExperiment`] with a fixed-rate multiplicative tracker
/// and compares the mean delay with the worst-case prediction.
pub fn delay_bound_check(spec: &RiskSpec, exp: &DelayExperiment) -> Result<DelayBoundReport> {
    if exp.mu.is_nan() || exp.mu <= 0.0 {
        return Err(Error::Domain {
            name: "violation intensity mu",
            range: "(0, 1 - epsilon]",
            value: exp.mu,
        });
    }
    let post = spec.epsilon() + exp.mu;
    if post > 1.0 {
        return Err(Error::Domain {
            name: "violation intensity mu",
            range: "(0, 1 - epsilon]",
            value: exp.mu,
        });
    }
    if !(0.0..=1.0).contains(&exp.pre_mean) {
        return Err(Error::Domain {
            name: "pre-shift mean",
            range: "[0, 1]",
            value: exp.pre_mean,
        });
    }
    if exp.trials == 0 {
        return Err(Error::Empty("trial list"));
    }
    let strategy = BettingStrategy::Fixed { lambda: exp.lambda };
    let window = WindowConfig::new(None, 1)?.with_burn_in(exp.burn_in);
    let grid = ThresholdGrid::from_values(vec![0.0])?;
    let records = (0..exp.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(exp.seed, &[trial as u64]);
            let stream = BernoulliStream::new(
                |t, _| if t <= exp.t_shift { exp.pre_mean } else { post },
                1,
                1,
                seed,
            );
            let run = run_monitor(
                &grid,
                spec,
                &window,
                TrackerKind::WealthMult,
                strategy,
                stream,
                exp.horizon,
                MonitorOptions::default(),
            )?;
            Ok(run.records[0])
        })
        .collect::<Result<Vec<_>>>()?;
    let predicted =
        (spec.log_rejection_threshold() + exp.t_shift as f64 * exp.lambda * spec.epsilon()) / (exp.lambda * exp.mu);
    let observed = delay_summary(&records);
    Ok(DelayBoundReport {
        predicted,
        observed,
        ratio: observed.mean.map(|m| m / predicted),
    })
}
