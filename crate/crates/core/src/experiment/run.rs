use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SourceConfig, WindowSize, DEFAULT_HORIZON};
use crate::error::{Error, Result};
use crate::monitor::{
    delay_summary, false_alarm_rate, run_monitors, DelaySummary, MonitorOptions, MonitorRun, StoppingRecord,
    TrackerSpec,
};
use crate::seeds::trial_seed;
use crate::streams::{FileStream, GroundTruth, ScoreRecord, StepInput, SyntheticStream};
use crate::types::{RiskSpec, ThresholdGrid};

/// Environment variable that caps the number of worker threads.
pub const WORKERS_ENV: &str = "RISKMON_WORKERS";

/// Results of one tracker in one `(window, batch)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerResult {
    pub tracker: TrackerSpec,
    /// `records[r]` holds the per-threshold records of trial `r`.
    pub records: Vec<Vec<StoppingRecord>>,
    /// `cs_sizes[r][t - 1]` is the set size after step `t` of trial `r`.
    pub cs_sizes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub window: WindowSize,
    pub batch: usize,
    pub trackers: Vec<TrackerResult>,
    /// Full runs of the first `trace_trials` trials.
    pub traced: Vec<Vec<MonitorRun>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub spec: RiskSpec,
    pub grid: ThresholdGrid,
    pub horizon: usize,
    pub truth_known: bool,
    pub cells: Vec<CellResult>,
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub window: WindowSize,
    pub batch: usize,
    pub tracker: String,
    pub strategy: String,
    pub trials: usize,
    pub delay: DelaySummary,
    /// Fraction of thresholds with a nonzero false-alarm rate.
    pub fp_positive: f64,
    /// Fraction of thresholds whose false-alarm rate exceeds `delta`.
    pub fp_above_delta: f64,
}

impl ExperimentResults {
    pub fn cell(&self, window: WindowSize, batch: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.window == window && c.batch == batch)
    }

    pub fn summary(&self) -> Result<Vec<SummaryRow>> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            for tr in &cell.trackers {
                let fp = false_alarm_rate(&tr.records, self.spec.delta())?;
                rows.push(SummaryRow {
                    window: cell.window,
                    batch: cell.batch,
                    tracker: tr.tracker.kind.name().to_string(),
                    strategy: tr.tracker.strategy.name().to_string(),
                    trials: tr.records.len(),
                    delay: delay_summary(tr.records.iter().flatten()),
                    fp_positive: fp.frac_positive,
                    fp_above_delta: fp.frac_above_delta,
                });
            }
        }
        Ok(rows)
    }
}

/// Number of worker threads from [`WORKERS_ENV`], if set and valid.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn file_records(config: &ExperimentConfig) -> Result<Option<Vec<ScoreRecord>>> {
    match &config.source {
        SourceConfig::File { path } => Ok(Some(crate::streams::ingest_scores(path, config.task)?)),
        SourceConfig::Synthetic { .. } => Ok(None),
    }
}

enum Source {
    Synthetic,
    File(Vec<ScoreRecord>),
}

struct Plan {
    spec: RiskSpec,
    grid: ThresholdGrid,
    horizon: usize,
    cells: Vec<(WindowSize, usize)>,
    source: Source,
}

fn plan(config: &ExperimentConfig) -> Result<Plan> {
    config.validate()?;
    let spec = config.spec()?;
    let grid = config.grid.build()?;
    let (source, batches, horizon) = match file_records(config)? {
        Some(records) => {
            let batches = crate::streams::group_batches(&records)?;
            let b = batches[0].len();
            let steps = batches.len();
            (Source::File(records), vec![b], config.horizon.unwrap_or(steps))
        }
        None => (
            Source::Synthetic,
            config.batches.clone(),
            config.horizon.unwrap_or(DEFAULT_HORIZON),
        ),
    };
    let cells = config
        .windows
        .iter()
        .flat_map(|&w| batches.iter().map(move |&b| (w, b)))
        .collect();
    Ok(Plan {
        spec,
        grid,
        horizon,
        cells,
        source,
    })
}

fn stream_for(
    config: &ExperimentConfig,
    plan: &Plan,
    batch: usize,
    trial: usize,
) -> Result<Box<dyn Iterator<Item = Result<StepInput>> + Send>> {
    match &plan.source {
        Source::File(records) => Ok(Box::new(FileStream::new(records, config.task, plan.grid.clone())?)),
        Source::Synthetic => {
            let sampler = config.sampler().expect("synthetic source")?;
            Ok(Box::new(SyntheticStream::new(
                sampler,
                config.task,
                plan.grid.clone(),
                batch,
                config.ground_truth,
                trial_seed(config.seed, trial, batch),
            )?))
        }
    }
}

/// All configured trackers on trial `trial` of cell `(window, batch)`.
pub fn run_trial(
    config: &ExperimentConfig,
    window: WindowSize,
    batch: usize,
    trial: usize,
    keep_values: bool,
) -> Result<Vec<MonitorRun>> {
    let plan = plan(config)?;
    run_planned(config, &plan, window, batch, trial, keep_values)
}

fn run_planned(
    config: &ExperimentConfig,
    plan: &Plan,
    window: WindowSize,
    batch: usize,
    trial: usize,
    keep_values: bool,
) -> Result<Vec<MonitorRun>> {
    let stream = stream_for(config, plan, batch, trial)?;
    let window_cfg = config.window_config(window, batch)?;
    run_monitors(
        &plan.grid,
        &plan.spec,
        &window_cfg,
        &config.tracker_specs(),
        stream,
        plan.horizon,
        MonitorOptions { keep_values },
    )
}

/// Runs every `(window, batch)` cell over all trials. Trials run in
/// parallel; results are assembled in a fixed order, so the output does not
/// depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    let plan = plan(config)?;
    let jobs: Vec<(usize, usize)> = (0..plan.cells.len())
        .flat_map(|c| (0..config.trials).map(move |r| (c, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(c, r)| {
                let (w, b) = plan.cells[c];
                run_planned(config, &plan, w, b, r, r < config.trace_trials)
            })
            .collect::<Result<Vec<_>>>()
    };
    let outputs = match workers_from_env() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(vec![format!("{WORKERS_ENV}: {e}")]))?
            .install(work)?,
        None => work()?,
    };

    let specs = config.tracker_specs();
    let mut cells: Vec<CellResult> = plan
        .cells
        .iter()
        .map(|&(window, batch)| CellResult {
            window,
            batch,
            trackers: specs
                .iter()
                .map(|&tracker| TrackerResult {
                    tracker,
                    records: Vec::with_capacity(config.trials),
                    cs_sizes: Vec::with_capacity(config.trials),
                })
                .collect(),
            traced: Vec::new(),
        })
        .collect();
    for (&(c, r), runs) in jobs.iter().zip(outputs) {
        let cell = &mut cells[c];
        for (tr, run) in cell.trackers.iter_mut().zip(&runs) {
            tr.records.push(run.records.clone());
            tr.cs_sizes.push(run.cs_sizes());
        }
        if r < config.trace_trials {
            cell.traced.push(runs);
        }
    }
    Ok(ExperimentResults {
        config: config.clone(),
        spec: plan.spec,
        grid: plan.grid,
        horizon: plan.horizon,
        truth_known: matches!(plan.source, Source::Synthetic) && config.ground_truth != GroundTruth::None,
        cells,
    })
}

/// Raw records of one synthetic trial, as `simulate` writes them.
pub fn simulate_scores(config: &ExperimentConfig, batch: usize, trial: usize) -> Result<Vec<ScoreRecord>> {
    let sampler = config.sampler().ok_or_else(|| {
        Error::Config(vec!["source: simulate needs a synthetic source".into()])
    })??;
    let grid = config.grid.build()?;
    let mut stream = SyntheticStream::new(
        sampler,
        config.task,
        grid,
        batch,
        GroundTruth::None,
        trial_seed(config.seed, trial, batch),
    )?;
    let horizon = config.horizon.unwrap_or(DEFAULT_HORIZON);
    let mut out = Vec::with_capacity(horizon * batch);
    for _ in 0..horizon {
        out.extend(stream.next_records()?);
    }
    Ok(out)
}
