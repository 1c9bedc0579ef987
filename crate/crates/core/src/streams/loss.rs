use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LossRecord, ThresholdGrid};

/// Whether an observation was drawn from the inlier or outlier distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    In,
    Out,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::In => "in",
            Source::Out => "out",
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "in" => Ok(Source::In),
            "out" => Ok(Source::Out),
            other => Err(format!("source must be `in` or `out`, got `{other}`")),
        }
    }
}

/// One scored observation.
///
/// `score` is the outlier score for TER or the true-class probability for
/// classification coverage; regression coverage uses `yhat` and `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub t: usize,
    pub score: Option<f64>,
    pub source: Option<Source>,
    pub yhat: Option<f64>,
    pub y: Option<f64>,
}

impl ScoreRecord {
    pub fn scored(t: usize, score: f64, source: Source) -> Self {
        Self {
            t,
            score: Some(score),
            source: Some(source),
            yhat: None,
            y: None,
        }
    }

    pub fn probability(t: usize, p: f64) -> Self {
        Self {
            t,
            score: Some(p),
            source: None,
            yhat: None,
            y: None,
        }
    }

    pub fn regression(t: usize, yhat: f64, y: f64) -> Self {
        Self {
            t,
            score: None,
            source: None,
            yhat: Some(yhat),
            y: Some(y),
        }
    }
}

/// The monitored risk and how a record turns into a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Total error rate of the outlier flag `score >= psi`.
    Ter,
    /// Miscoverage of the set `{y : p(y|x) >= psi}`.
    MiscoverageCls,
    /// Miscoverage of the interval `[yhat - psi, yhat + psi]`.
    MiscoverageReg,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Ter => "ter",
            Task::MiscoverageCls => "miscoverage_cls",
            Task::MiscoverageReg => "miscoverage_reg",
        }
    }

    /// Columns a score file for this task must carry besides `t`.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Task::Ter => &["score", "source"],
            Task::MiscoverageCls => &["score"],
            Task::MiscoverageReg => &["yhat", "y"],
        }
    }

    pub fn loss(self, record: &ScoreRecord, psi: f64) -> Result<f64> {
        match self {
            Task::Ter => {
                let score = record.score.ok_or(Error::MissingField("score"))?;
                let source = record.source.ok_or(Error::MissingField("source"))?;
                Ok(ter_loss(score, source, psi))
            }
            Task::MiscoverageCls => {
                let p = record.score.ok_or(Error::MissingField("score"))?;
                Ok(miscoverage_loss_cls(p, psi))
            }
            Task::MiscoverageReg => {
                let yhat = record.yhat.ok_or(Error::MissingField("yhat"))?;
                let y = record.y.ok_or(Error::MissingField("y"))?;
                Ok(miscoverage_loss_reg(yhat, y, psi))
            }
        }
    }

    /// Per-threshold losses of one batch of records at time `t`.
    pub fn loss_record(self, t: usize, batch: &[ScoreRecord], grid: &ThresholdGrid) -> Result<LossRecord> {
        if batch.is_empty() {
            return Err(Error::Empty("record batch"));
        }
        let values = grid
            .values()
            .iter()
            .map(|&psi| batch.iter().map(|r| self.loss(r, psi)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(LossRecord { t, values })
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ter" => Ok(Task::Ter),
            "miscoverage_cls" | "cls" => Ok(Task::MiscoverageCls),
            "miscoverage_reg" | "reg" => Ok(Task::MiscoverageReg),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

/// 1 for a flagged inlier (`score >= psi`) or a missed outlier (`score < psi`).
pub fn ter_loss(score: f64, source: Source, psi: f64) -> f64 {
    let flagged = score >= psi;
    match (source, flagged) {
        (Source::In, true) | (Source::Out, false) => 1.0,
        _ => 0.0,
    }
}

/// 1 when the true class probability falls below `psi`.
pub fn miscoverage_loss_cls(p: f64, psi: f64) -> f64 {
    if p < psi {
        1.0
    } else {
        0.0
    }
}

/// 1 when `y` lies outside the closed interval `[yhat - psi, yhat + psi]`.
pub fn miscoverage_loss_reg(yhat: f64, y: f64, psi: f64) -> f64 {
    if (y - yhat).abs() > psi {
        1.0
    } else {
        0.0
    }
}
