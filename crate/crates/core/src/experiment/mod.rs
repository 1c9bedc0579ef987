//! Experiment orchestration: validated configs, parameter sweeps over
//! window and batch size, output bundles and guarantee checks.

mod check;
mod config;
mod output;
mod run;

pub use check::{validate_guarantees, CheckLine, GuaranteeReport, CHECK_CONFIDENCE};
pub use config::{
    default_inlier, default_outlier, ExperimentConfig, GridConfig, SourceConfig, WindowSize, DEFAULT_HORIZON,
};
pub use output::{
    emit_trace, fmt_real, write_bundle, Bundle, Metadata, RecordGroup, CS_TRACE_FILE, METADATA_FILE, RECORDS_FILE,
    SUMMARY_FILE, TRACE_DIR,
};
pub use run::{
    run_experiment, run_trial, simulate_scores, workers_from_env, CellResult, ExperimentResults, SummaryRow,
    TrackerResult, WORKERS_ENV,
};
