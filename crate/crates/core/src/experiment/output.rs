use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, WindowSize};
use super::run::ExperimentResults;
use crate::error::{Error, Result};
use crate::monitor::{MonitorRun, StoppingRecord};
use crate::trackers::TrackerSnapshot;
use crate::types::ThresholdGrid;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const CS_TRACE_FILE: &str = "cs_trace.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const TRACE_DIR: &str = "traces";

/// Fixed 17-significant-digit formatting so reruns diff cleanly.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub rejection_threshold: f64,
    pub horizon: usize,
    pub trials: usize,
    pub grid_points: usize,
    pub truth_known: bool,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
}

impl Metadata {
    pub fn from_results(res: &ExperimentResults) -> Self {
        Self {
            config_hash: res.config.hash(),
            seed: res.config.seed,
            epsilon: res.spec.epsilon(),
            delta: res.spec.delta(),
            rejection_threshold: res.spec.rejection_threshold(),
            horizon: res.horizon,
            trials: res.config.trials,
            grid_points: res.grid.len(),
            truth_known: res.truth_known,
            notes: vec![
                "delay statistics use nonnegative delays only; false alarms are counted separately".into(),
                "delays are measured in stream time, burn-in steps included".into(),
                "censored records (no stop by the horizon) are reported, never imputed".into(),
                "fp_positive and fp_above_delta are fractions of thresholds".into(),
            ],
            config: res.config.clone(),
        }
    }
}

/// Per-step rows of one trial: a `(t, tracker, psi)` row per threshold and
/// a `(t, tracker)` row carrying the set size.
pub fn emit_trace<W: Write>(writer: W, runs: &[MonitorRun], grid: &ThresholdGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "tracker", "psi", "value", "stopped", "cs_size"])?;
    let horizon = runs.first().map_or(0, |r| r.trace.len());
    for run in runs {
        if run.values.is_none() {
            return Err(Error::MissingField("per-step values (run with keep_values)"));
        }
    }
    for t in 0..horizon {
        for run in runs {
            let name = run.tracker.kind.name();
            let step = &run.values.as_ref().expect("checked above")[t];
            let tt = (t + 1).to_string();
            for (k, &psi) in grid.values().iter().enumerate() {
                w.write_record([
                    tt.as_str(),
                    name,
                    &fmt_real(psi),
                    &fmt_real(step.values[k]),
                    if step.stopped[k] { "1" } else { "0" },
                    "",
                ])?;
            }
            w.write_record([tt.as_str(), name, "", "", "", &run.trace[t].size().to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trace writer>", e))?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_all(res: &ExperimentResults, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(SUMMARY_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "window", "batch", "tracker", "strategy", "trials", "delay_mean", "delay_sd", "delay_count",
        "censored", "missed", "false_alarms", "records", "fp_positive", "fp_above_delta",
    ])?;
    for row in res.summary()? {
        let d = row.delay;
        w.write_record([
            row.window.to_string(),
            row.batch.to_string(),
            row.tracker,
            row.strategy,
            row.trials.to_string(),
            fmt_opt(d.mean.map(fmt_real)),
            fmt_opt(d.sd.map(fmt_real)),
            d.count.to_string(),
            d.censored.to_string(),
            d.missed.to_string(),
            d.false_alarms.to_string(),
            d.total.to_string(),
            fmt_real(row.fp_positive),
            fmt_real(row.fp_above_delta),
        ])?;
    }
    finish(w, &path)?;

    let path = dir.join(RECORDS_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "window", "batch", "tracker", "trial", "psi", "tau_star", "tau", "delay", "censored", "false_alarm",
    ])?;
    for cell in &res.cells {
        let (ws, bs) = (cell.window.to_string(), cell.batch.to_string());
        for tr in &cell.trackers {
            for (trial, records) in tr.records.iter().enumerate() {
                let trial = trial.to_string();
                for r in records {
                    w.write_record([
                        ws.as_str(),
                        bs.as_str(),
                        tr.tracker.kind.name(),
                        trial.as_str(),
                        &fmt_real(r.psi),
                        &fmt_opt(r.tau_star),
                        &fmt_opt(r.tau),
                        &fmt_opt(r.delay),
                        if r.censored { "1" } else { "0" },
                        if r.false_alarm { "1" } else { "0" },
                    ])?;
                }
            }
        }
    }
    finish(w, &path)?;

    let path = dir.join(CS_TRACE_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record(["window", "batch", "tracker", "t", "cs_size_mean", "cs_size_min", "cs_size_max"])?;
    for cell in &res.cells {
        let (ws, bs) = (cell.window.to_string(), cell.batch.to_string());
        for tr in &cell.trackers {
            let n = tr.cs_sizes.len();
            for t in 0..res.horizon {
                let sizes = tr.cs_sizes.iter().map(|s| s[t]);
                let sum: usize = sizes.clone().sum();
                w.write_record([
                    ws.as_str(),
                    bs.as_str(),
                    tr.tracker.kind.name(),
                    &(t + 1).to_string(),
                    &fmt_real(sum as f64 / n as f64),
                    &fmt_opt(sizes.clone().min()),
                    &fmt_opt(sizes.max()),
                ])?;
            }
        }
    }
    finish(w, &path)?;

    if res.cells.iter().any(|c| !c.traced.is_empty()) {
        let traces = dir.join(TRACE_DIR);
        fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
        for cell in &res.cells {
            for (trial, runs) in cell.traced.iter().enumerate() {
                let path = traces.join(format!("trace_S{}_B{}_trial{}.csv", cell.window, cell.batch, trial));
                let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                emit_trace(std::io::BufWriter::new(file), runs, &res.grid)?;
                let path = traces.join(format!("states_S{}_B{}_trial{}.json", cell.window, cell.batch, trial));
                let states: BTreeMap<&str, Vec<TrackerSnapshot>> = runs
                    .iter()
                    .map(|r| (r.tracker.kind.name(), r.final_states.iter().map(|s| s.snapshot()).collect()))
                    .collect();
                let mut text = serde_json::to_string_pretty(&states)?;
                text.push('\n');
                fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
        }
    }

    let path = dir.join(METADATA_FILE);
    let mut text = serde_json::to_string_pretty(&Metadata::from_results(res))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Writes the bundle into a scratch directory next to `dir` and moves it
/// into place only once every file is complete.
pub fn write_bundle(res: &ExperimentResults, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref().to_path_buf();
    let name = dir.file_name().map_or_else(|| "bundle".into(), |n| n.to_string_lossy().into_owned());
    let scratch = dir.with_file_name(format!(".{name}.partial-{}", std::process::id()));
    if scratch.exists() {
        fs::remove_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
    }
    if let Err(e) = write_all(res, &scratch) {
        let _ = fs::remove_dir_all(&scratch);
        return Err(e);
    }
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    fs::rename(&scratch, &dir).map_err(|e| {
        let _ = fs::remove_dir_all(&scratch);
        Error::io(&dir, e)
    })?;
    Ok(dir)
}

/// Records of one `(window, batch, tracker)` group, per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordGroup {
    pub window: WindowSize,
    pub batch: usize,
    pub tracker: String,
    pub trials: Vec<Vec<StoppingRecord>>,
}

/// What [`super::validate_guarantees`] needs from a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub metadata: Option<Metadata>,
    pub groups: Vec<RecordGroup>,
}

impl Bundle {
    pub fn from_results(res: &ExperimentResults) -> Self {
        let groups = res
            .cells
            .iter()
            .flat_map(|cell| {
                cell.trackers.iter().map(move |tr| RecordGroup {
                    window: cell.window,
                    batch: cell.batch,
                    tracker: tr.tracker.kind.name().to_string(),
                    trials: tr.records.clone(),
                })
            })
            .collect();
        Self {
            metadata: Some(Metadata::from_results(res)),
            groups,
        }
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(METADATA_FILE);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let metadata: Metadata = serde_json::from_str(&meta_text)?;

        let path = dir.join(RECORDS_FILE);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let mut groups: Vec<RecordGroup> = Vec::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |what: &str| Error::Parse {
                line,
                message: format!("{}: bad {what}", path.display()),
            };
            let get = |i: usize| row.get(i).unwrap_or("");
            let opt = |i: usize| -> Result<Option<i64>> {
                match get(i) {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|_| bad("integer")),
                }
            };
            let window: WindowSize = get(0).parse().map_err(|_| bad("window"))?;
            let batch: usize = get(1).parse().map_err(|_| bad("batch"))?;
            let tracker = get(2).to_string();
            let trial: usize = get(3).parse().map_err(|_| bad("trial"))?;
            let record = StoppingRecord {
                psi: get(4).parse().map_err(|_| bad("psi"))?,
                tau_star: opt(5)?.map(|v| v as usize),
                tau: opt(6)?.map(|v| v as usize),
                delay: opt(7)?,
                censored: get(8) == "1",
                false_alarm: get(9) == "1",
            };
            let idx = match groups
                .iter()
                .position(|g| g.window == window && g.batch == batch && g.tracker == tracker)
            {
                Some(i) => i,
                None => {
                    groups.push(RecordGroup {
                        window,
                        batch,
                        tracker,
                        trials: Vec::new(),
                    });
                    groups.len() - 1
                }
            };
            let g = &mut groups[idx];
            while g.trials.len() <= trial {
                g.trials.push(Vec::new());
            }
            g.trials[trial].push(record);
        }
        Ok(Self {
            metadata: Some(metadata),
            groups,
        })
    }
}
