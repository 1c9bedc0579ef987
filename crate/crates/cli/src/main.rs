//! `riskmon`: simulate score streams, run monitors, sweep window and batch
//! sizes, and check false-alarm guarantees of saved bundles.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use riskmon_core::experiment::{
    run_experiment, simulate_scores, validate_guarantees, write_bundle, Bundle, ExperimentConfig,
    ExperimentResults, SourceConfig, SummaryRow, WindowSize,
};
use riskmon_core::streams::{write_scores, GroundTruth, ScorePool};
use riskmon_core::parse;
use riskmon_core::{BettingStrategy, RiskSpec, ShiftSchedule, Task, TrackerKind};

const SCORE_FILE_HELP: &str = "Score files are CSV with a header row and one record per line. \
Columns by task: ter needs t,score,source (source is in|out); miscoverage_cls needs t,score \
(score is the probability of the true label); miscoverage_reg needs t,yhat,y. \
t starts at 1 and rows sharing t form one batch.";

#[derive(Parser)]
#[command(name = "riskmon", version, about, after_help = SCORE_FILE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one synthetic score stream and write it as a score file.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output score file.
        #[arg(long)]
        out: PathBuf,
        /// Records per time step.
        #[arg(long, default_value_t = 1)]
        batch: usize,
        /// Trial index; selects the derived seed.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run trackers on a single stream and write a bundle with its trace.
    Monitor {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
        /// Sliding window length or `none`.
        #[arg(long, default_value = "none")]
        window: WindowSize,
        /// Records per step for synthetic streams; score files fix their own.
        #[arg(long, default_value_t = 1)]
        batch: usize,
    },
    /// Run every window and batch combination over all trials.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the false-alarm guarantee of a saved bundle.
    Check {
        /// Bundle directory written by `monitor` or `sweep`.
        bundle: PathBuf,
    },
}

/// Experiment settings. A config file replaces the defaults; flags
/// override the file.
#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Loss: ter, miscoverage_cls or miscoverage_reg.
    #[arg(long)]
    task: Option<Task>,
    /// Risk tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// False-alarm level; stopping happens at wealth 1/delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Smallest threshold.
    #[arg(long)]
    grid_lo: Option<f64>,
    /// Largest threshold.
    #[arg(long)]
    grid_hi: Option<f64>,
    /// Number of evenly spaced thresholds.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Comma-separated window lengths, `none` for full history.
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<WindowSize>>,
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',')]
    batches: Option<Vec<usize>>,
    /// Comma-separated tracker kinds.
    #[arg(long, value_delimiter = ',')]
    trackers: Option<Vec<TrackerKind>>,
    /// Betting strategy for one tracker, e.g. wealth_mult=fixed:0.2 or
    /// wealth_eb=eb:0.5. Repeatable.
    #[arg(long = "strategy", value_parser = parse::tracker_strategy)]
    strategies: Vec<(TrackerKind, BettingStrategy)>,
    /// Steps during which stopping is suppressed; default floor(100 / B).
    #[arg(long)]
    burn_in: Option<usize>,
    /// Sum only the last S wealth increments instead of the full history.
    #[arg(long)]
    strict_window: bool,
    /// Independent trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Steps per stream.
    #[arg(long)]
    horizon: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// exact, oracle:SIZE or none.
    #[arg(long, value_parser = parse::ground_truth)]
    ground_truth: Option<GroundTruth>,
    /// Outlier weight schedule: iid, immediate[:START], stepwise[:T_OUT[:INC]].
    #[arg(long, value_parser = parse::schedule)]
    schedule: Option<ShiftSchedule>,
    /// Inlier score pool, beta:A,B.
    #[arg(long, value_parser = parse::pool)]
    inlier: Option<ScorePool>,
    /// Outlier score pool, beta:A,B.
    #[arg(long, value_parser = parse::pool)]
    outlier: Option<ScorePool>,
    /// Score file to monitor instead of a synthetic stream.
    #[arg(long, conflicts_with_all = ["schedule", "inlier", "outlier"])]
    input: Option<PathBuf>,
    /// Trials whose per-step traces are written.
    #[arg(long)]
    trace_trials: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(task, epsilon, delta, windows, batches, trackers, trials, seed, ground_truth, trace_trials);
        if let Some(v) = self.grid_lo {
            c.grid.lo = v;
        }
        if let Some(v) = self.grid_hi {
            c.grid.hi = v;
        }
        if let Some(v) = self.grid_points {
            c.grid.points = v;
        }
        if self.burn_in.is_some() {
            c.burn_in = self.burn_in;
        }
        if self.horizon.is_some() {
            c.horizon = self.horizon;
        }
        if self.strict_window {
            c.strict_window = true;
        }
        for &(kind, strategy) in &self.strategies {
            c.strategies.insert(kind, strategy);
        }
        if let Some(path) = &self.input {
            c.source = SourceConfig::File { path: path.clone() };
            if self.ground_truth.is_none() {
                c.ground_truth = GroundTruth::None;
            }
            if self.trials.is_none() {
                c.trials = 1;
            }
        } else if self.schedule.is_some() || self.inlier.is_some() || self.outlier.is_some() {
            let (mut schedule, mut inlier, mut outlier) = match c.source {
                SourceConfig::Synthetic { schedule, inlier, outlier } => (schedule, inlier, outlier),
                SourceConfig::File { .. } => (
                    ShiftSchedule::default(),
                    riskmon_core::experiment::default_inlier(),
                    riskmon_core::experiment::default_outlier(),
                ),
            };
            if let Some(s) = &self.schedule {
                schedule = s.clone();
            }
            if let Some(p) = &self.inlier {
                inlier = p.clone();
            }
            if let Some(p) = &self.outlier {
                outlier = p.clone();
            }
            c.source = SourceConfig::Synthetic { schedule, inlier, outlier };
        }
        Ok(c)
    }
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:>6} {:>4} {:<20} {:>10} {:>10} {:>7} {:>7} {:>7} {:>8} {:>8}",
        "S", "B", "tracker", "delay", "sd", "n", "missed", "alarms", "%FP>0", "%FP>d"
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
    for r in rows {
        println!(
            "{:>6} {:>4} {:<20} {:>10} {:>10} {:>7} {:>7} {:>7} {:>8.2} {:>8.2}",
            r.window.to_string(),
            r.batch,
            r.tracker,
            opt(r.delay.mean),
            opt(r.delay.sd),
            r.delay.count,
            r.delay.missed,
            r.delay.false_alarms,
            100.0 * r.fp_positive,
            100.0 * r.fp_above_delta,
        );
    }
}

/// Writes, summarizes and, when ground truth is known, checks the bundle.
fn finish(res: &ExperimentResults, out: &Path) -> Result<bool> {
    let dir = write_bundle(res, out)?;
    print_summary(&res.summary()?);
    println!("bundle: {} (config {})", dir.display(), res.config.hash());
    if !res.truth_known {
        println!("no ground truth: guarantee check skipped");
        return Ok(true);
    }
    let report = validate_guarantees(&Bundle::from_results(res), &res.spec);
    println!("{report}");
    Ok(report.passed())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, out, batch, trial } => {
            if config.input.is_some() {
                bail!("simulate generates scores; --input is not allowed");
            }
            let cfg = config.resolve()?;
            cfg.validate()?;
            let records = simulate_scores(&cfg, batch, trial)?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_scores(std::io::BufWriter::new(file), cfg.task, &records)?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(true)
        }
        Command::Monitor { config, out, window, batch } => {
            let mut cfg = config.resolve()?;
            cfg.windows = vec![window];
            cfg.batches = vec![batch];
            cfg.trials = 1;
            cfg.trace_trials = 1;
            finish(&run_experiment(&cfg)?, &out)
        }
        Command::Sweep { config, out } => finish(&run_experiment(&config.resolve()?)?, &out),
        Command::Check { bundle } => {
            let loaded = Bundle::load(&bundle)?;
            let meta = loaded.metadata.as_ref().context("bundle has no metadata")?;
            let spec = RiskSpec::new(meta.epsilon, meta.delta)?;
            let report = validate_guarantees(&loaded, &spec);
            println!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
