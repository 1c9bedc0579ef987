//! Loss streams: task losses computed from scores, synthetic mixture-shift
//! scenarios and ingestion of exported score files.

mod ingest;
mod loss;
mod mixture;
mod schedule;

pub use ingest::{group_batches, ingest_scores, read_scores, write_scores, FileStream};
pub use loss::{miscoverage_loss_cls, miscoverage_loss_reg, ter_loss, ScoreRecord, Source, Task};
pub use mixture::{BernoulliStream, GroundTruth, MixtureSampler, RiskTable, ScorePool, SyntheticStream};
pub use schedule::ShiftSchedule;

use crate::types::LossRecord;

/// Ground truth accompanying one step, when the stream knows it.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Unknown,
    /// Exact risk per threshold.
    Risk(Vec<f64>),
    /// A fresh oracle batch of losses per threshold.
    Oracle(Vec<Vec<f64>>),
}

/// Everything the monitor consumes at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInput {
    pub record: LossRecord,
    pub truth: Truth,
}

impl StepInput {
    pub fn unlabelled(record: LossRecord) -> Self {
        Self {
            record,
            truth: Truth::Unknown,
        }
    }
}
