//! Streaming risk monitoring by testing-by-betting.
//!
//! Each candidate decision threshold gets its own evidence process. A
//! threshold leaves the confidence set once its wealth reaches `1/delta`,
//! which under the null of controlled risk happens with probability at most
//! `delta` over the whole stream.

pub mod betting;
pub mod error;
pub mod experiment;
pub mod moments;
pub mod monitor;
pub mod parse;
pub mod seeds;
pub mod stats;
pub mod streams;
pub mod trackers;
pub mod types;

pub use betting::{BettingStrategy, Direction};
pub use error::{Error, Result};
pub use moments::RunningMoments;
pub use trackers::{Tracker, TrackerKind, TrackerSnapshot, TrackerState};
pub use types::{LossRecord, RiskSpec, ThresholdGrid, WindowConfig};
pub use monitor::{run_monitor, run_monitors, ConfidenceSet, MonitorOptions, MonitorRun, StoppingRecord, TrackerSpec};
pub use streams::{ScoreRecord, ShiftSchedule, Source, StepInput, Task, Truth};
