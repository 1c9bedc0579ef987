use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::WindowSize;
use super::output::Bundle;
use crate::stats::{clopper_pearson_lower, clopper_pearson_upper};
use crate::trackers::TrackerKind;
use crate::types::RiskSpec;

/// Confidence of the per-threshold binomial bounds.
pub const CHECK_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub window: WindowSize,
    pub batch: usize,
    pub tracker: String,
    pub trials: usize,
    /// Threshold with the most false alarms.
    pub worst_psi: f64,
    pub worst_count: usize,
    /// Bounds on the worst threshold's false-alarm probability.
    pub lower: f64,
    pub upper: f64,
    /// Thresholds whose lower bound exceeds `delta`.
    pub violations: usize,
    pub passed: bool,
    /// Whether the tracker claims a false-alarm guarantee at all.
    pub guaranteed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub delta: f64,
    pub lines: Vec<CheckLine>,
    /// Reasons the report fails without a per-tracker verdict.
    pub problems: Vec<String>,
}

impl GuaranteeReport {
    /// True iff every guaranteed tracker passes and nothing prevented the check.
    pub fn passed(&self) -> bool {
        self.problems.is_empty() && self.lines.iter().all(|l| l.passed || !l.guaranteed)
    }
}

impl fmt::Display for GuaranteeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.problems {
            writeln!(f, "FAIL {p}")?;
        }
        for l in &self.lines {
            let verdict = match (l.passed, l.guaranteed) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "FAIL (no guarantee claimed)",
            };
            writeln!(
                f,
                "{verdict} S={} B={} {}: worst psi={:.4} alarms {}/{} rate in [{:.4}, {:.4}] ({}% CP), {} threshold(s) above delta={}",
                l.window,
                l.batch,
                l.tracker,
                l.worst_psi,
                l.worst_count,
                l.trials,
                l.lower,
                l.upper,
                CHECK_CONFIDENCE * 100.0,
                l.violations,
                self.delta
            )?;
        }
        write!(f, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// For each tracker group, a threshold fails when the exact one-sided lower
/// confidence bound on its false-alarm probability exceeds `delta`.
/// Empty bundles and bundles without ground truth fail closed.
pub fn validate_guarantees(bundle: &Bundle, spec: &RiskSpec) -> GuaranteeReport {
    let delta = spec.delta();
    let mut problems = Vec::new();
    if bundle.groups.iter().all(|g| g.trials.is_empty()) {
        problems.push("no trials".to_string());
    }
    if let Some(meta) = &bundle.metadata {
        if !meta.truth_known {
            problems.push("bundle has no ground truth, false alarms cannot be judged".to_string());
        }
    }
    let mut lines = Vec::new();
    for g in &bundle.groups {
        let trials = g.trials.len();
        if trials == 0 {
            continue;
        }
        let n_psi = g.trials[0].len();
        if g.trials.iter().any(|t| t.len() != n_psi) {
            problems.push(format!("S={} B={} {}: trials cover different grids", g.window, g.batch, g.tracker));
            continue;
        }
        let counts: Vec<usize> = (0..n_psi)
            .map(|k| g.trials.iter().filter(|t| t[k].false_alarm).count())
            .collect();
        let (worst, &worst_count) = counts
            .iter()
            .enumerate()
            .max_by_key(|&(k, c)| (*c, std::cmp::Reverse(k)))
            .unwrap_or((0, &0));
        let violations = counts
            .iter()
            .filter(|&&c| clopper_pearson_lower(c as u64, trials as u64, CHECK_CONFIDENCE) > delta)
            .count();
        let guaranteed = g
            .tracker
            .parse::<TrackerKind>()
            .map(TrackerKind::has_guarantee)
            .unwrap_or(false);
        lines.push(CheckLine {
            window: g.window,
            batch: g.batch,
            tracker: g.tracker.clone(),
            trials,
            worst_psi: g.trials[0].get(worst).map_or(f64::NAN, |r| r.psi),
            worst_count,
            lower: clopper_pearson_lower(worst_count as u64, trials as u64, CHECK_CONFIDENCE),
            upper: clopper_pearson_upper(worst_count as u64, trials as u64, CHECK_CONFIDENCE),
            violations,
            passed: violations == 0,
            guaranteed,
        });
    }
    GuaranteeReport { delta, lines, problems }
}
