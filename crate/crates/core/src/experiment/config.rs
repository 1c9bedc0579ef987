use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::betting::BettingStrategy;
use crate::error::{Error, Result};
use crate::monitor::TrackerSpec;
use crate::streams::{GroundTruth, MixtureSampler, ScorePool, ShiftSchedule, Task};
use crate::trackers::{Tracker, TrackerKind};
use crate::types::{RiskSpec, ThresholdGrid, WindowConfig};

pub const DEFAULT_HORIZON: usize = 1500;

/// Sliding-window length; `none` keeps the full history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowSize(pub Option<usize>);

impl fmt::Display for WindowSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("none"),
            Some(s) => write!(f, "{s}"),
        }
    }
}

impl std::str::FromStr for WindowSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "none" | "None" | "" => Ok(WindowSize(None)),
            other => other
                .parse()
                .map(|n| WindowSize(Some(n)))
                .map_err(|_| format!("window must be `none` or a positive integer, got `{other}`")),
        }
    }
}

impl Serialize for WindowSize {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            None => s.serialize_str("none"),
            Some(n) => s.serialize_u64(n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for WindowSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Steps(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Steps(n) => Ok(WindowSize(Some(n))),
            Raw::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            points: 101,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<ThresholdGrid> {
        ThresholdGrid::linspace(self.lo, self.hi, self.points)
    }
}

/// Where losses come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Synthetic {
        #[serde(default)]
        schedule: ShiftSchedule,
        #[serde(default = "default_inlier")]
        inlier: ScorePool,
        #[serde(default = "default_outlier")]
        outlier: ScorePool,
    },
    /// A score file; `batches` and `trials` are taken from the file.
    File { path: PathBuf },
}

/// Inlier scores concentrate near 0.
pub fn default_inlier() -> ScorePool {
    ScorePool::Beta { a: 1.0, b: 12.0 }
}

/// Outlier scores spread over the whole unit interval.
pub fn default_outlier() -> ScorePool {
    ScorePool::Beta { a: 1.0, b: 1.0 }
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Synthetic {
            schedule: ShiftSchedule::default(),
            inlier: default_inlier(),
            outlier: default_outlier(),
        }
    }
}

/// Everything that determines an experiment. Output locations are
/// deliberately absent so they never affect the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub epsilon: f64,
    pub delta: f64,
    pub grid: GridConfig,
    pub windows: Vec<WindowSize>,
    pub batches: Vec<usize>,
    pub trackers: Vec<TrackerKind>,
    /// Overrides of the per-kind default strategy.
    pub strategies: BTreeMap<TrackerKind, BettingStrategy>,
    /// Overrides `floor(100 / B)`.
    pub burn_in: Option<usize>,
    pub strict_window: bool,
    pub trials: usize,
    /// Defaults to [`DEFAULT_HORIZON`] for synthetic sources and to the
    /// file length for file sources.
    pub horizon: Option<usize>,
    pub seed: u64,
    pub ground_truth: GroundTruth,
    pub source: SourceConfig,
    /// Trials whose full per-threshold traces are written.
    pub trace_trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Ter,
            epsilon: 0.1,
            delta: 0.1,
            grid: GridConfig::default(),
            windows: vec![WindowSize(None), WindowSize(Some(200)), WindowSize(Some(50)), WindowSize(Some(10))],
            batches: vec![1, 10, 50],
            trackers: vec![
                TrackerKind::RunningRisk,
                TrackerKind::WealthMult,
                TrackerKind::WealthSum,
                TrackerKind::WealthEb,
            ],
            strategies: BTreeMap::new(),
            burn_in: None,
            strict_window: false,
            trials: 50,
            horizon: None,
            seed: 0,
            ground_truth: GroundTruth::Exact,
            source: SourceConfig::default(),
            trace_trials: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn spec(&self) -> Result<RiskSpec> {
        RiskSpec::new(self.epsilon, self.delta)
    }

    pub fn strategy_for(&self, kind: TrackerKind) -> BettingStrategy {
        self.strategies.get(&kind).copied().unwrap_or_else(|| kind.default_strategy())
    }

    pub fn tracker_specs(&self) -> Vec<TrackerSpec> {
        self.trackers
            .iter()
            .map(|&k| TrackerSpec::new(k, self.strategy_for(k)))
            .collect()
    }

    pub fn window_config(&self, window: WindowSize, batch: usize) -> Result<WindowConfig> {
        let mut w = WindowConfig::new(window.0, batch)?.with_strict_window(self.strict_window);
        if let Some(b) = self.burn_in {
            w = w.with_burn_in(b);
        }
        Ok(w)
    }

    pub fn sampler(&self) -> Option<Result<MixtureSampler>> {
        match &self.source {
            SourceConfig::Synthetic {
                schedule,
                inlier,
                outlier,
            } => Some(MixtureSampler::new(schedule.clone(), inlier.clone(), outlier.clone())),
            SourceConfig::File { .. } => None,
        }
    }

    /// Checks every field and reports all problems together.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let spec = match self.spec() {
            Ok(s) => Some(s),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        };
        if let Err(e) = self.grid.build() {
            errors.push(e.to_string());
        }
        if self.windows.is_empty() {
            errors.push("windows: at least one window is required".into());
        }
        if self.windows.contains(&WindowSize(Some(0))) {
            errors.push("windows: a window must be at least 1 step".into());
        }
        if self.batches.is_empty() {
            errors.push("batches: at least one batch size is required".into());
        }
        if self.batches.contains(&0) {
            errors.push("batches: batch size must be at least 1".into());
        }
        if self.trackers.is_empty() {
            errors.push("trackers: at least one tracker is required".into());
        }
        for (i, k) in self.trackers.iter().enumerate() {
            if self.trackers[..i].contains(k) {
                errors.push(format!("trackers: {k} listed twice"));
            }
            if *k == TrackerKind::OracleRisk {
                errors.push("trackers: oracle_risk is driven by ground_truth, not listed as a tracker".into());
            }
        }
        for k in self.strategies.keys() {
            if !self.trackers.contains(k) {
                errors.push(format!("strategies: {k} is not among the trackers"));
            }
        }
        if let Some(spec) = &spec {
            for ts in self.tracker_specs() {
                if let Err(e) = Tracker::new(ts.kind, ts.strategy, spec, &WindowConfig::default()) {
                    errors.push(format!("strategies: {}: {e}", ts.kind));
                }
            }
        }
        if self.trials == 0 {
            errors.push("trials: at least one trial is required".into());
        }
        if self.horizon == Some(0) {
            errors.push("horizon: must be at least 1".into());
        }
        if let GroundTruth::Oracle { size: 0 } = self.ground_truth {
            errors.push("ground_truth: oracle batch size must be at least 1".into());
        }
        match &self.source {
            SourceConfig::Synthetic {
                schedule,
                inlier,
                outlier,
            } => {
                for (what, r) in [
                    ("schedule", schedule.validate()),
                    ("inlier", inlier.validate()),
                    ("outlier", outlier.validate()),
                ] {
                    if let Err(e) = r {
                        errors.push(format!("source.{what}: {e}"));
                    }
                }
            }
            SourceConfig::File { path } => {
                if !path.is_file() {
                    errors.push(format!("source.path: {} is not a readable file", path.display()));
                }
                if self.trials != 1 {
                    errors.push("trials: a file source is a single fixed stream, set trials = 1".into());
                }
                if self.ground_truth != GroundTruth::None {
                    errors.push("ground_truth: file sources carry no ground truth, set kind = \"none\"".into());
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            trials = 5
            windows = ["none", 20]
            trackers = ["wealth_mult"]
            [strategies.wealth_mult]
            kind = "fixed"
            lambda = 0.5
            [source]
            kind = "synthetic"
            schedule = { kind = "stepwise", t_out = 100 }
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.windows, vec![WindowSize(None), WindowSize(Some(20))]);
        assert_eq!(cfg.strategy_for(TrackerKind::WealthMult), BettingStrategy::Fixed { lambda: 0.5 });
        assert_eq!(cfg.batches, vec![1, 10, 50]);
    }

    #[test]
    fn all_errors_listed_at_once() {
        let cfg = ExperimentConfig {
            epsilon: 1.5,
            batches: vec![0],
            trials: 0,
            trackers: vec![],
            ..Default::default()
        };
        match cfg.validate() {
            Err(Error::Config(errors)) => assert!(errors.len() >= 4, "{errors:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_strategy_reported() {
        let mut cfg = ExperimentConfig::default();
        cfg.strategies.insert(TrackerKind::WealthMult, BettingStrategy::Fixed { lambda: 10.0 });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_toml_str("trails = 5").is_err());
        assert!(ExperimentConfig::from_toml_str("windows = [\"sometimes\"]").is_err());
    }

    #[test]
    fn hash_tracks_semantic_fields() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 1, ..Default::default() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
