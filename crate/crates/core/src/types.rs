//! Domain types shared by every tracker: the risk specification, the grid of
//! candidate thresholds, per-step loss records and the history window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerated risk level `epsilon` and false-alarm budget `delta`.
///
/// A threshold is rejected once its evidence reaches `1 / delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RiskSpecRepr", into = "RiskSpecRepr")]
pub struct RiskSpec {
    epsilon: f64,
    delta: f64,
    rejection_threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct RiskSpecRepr {
    epsilon: f64,
    delta: f64,
}

impl TryFrom<RiskSpecRepr> for RiskSpec {
    type Error = Error;

    fn try_from(r: RiskSpecRepr) -> Result<Self> {
        RiskSpec::new(r.epsilon, r.delta)
    }
}

impl From<RiskSpec> for RiskSpecRepr {
    fn from(s: RiskSpec) -> Self {
        RiskSpecRepr {
            epsilon: s.epsilon,
            delta: s.delta,
        }
    }
}

pub(crate) fn open_unit(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            range: "(0, 1)",
            value,
        })
    }
}

impl RiskSpec {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        let epsilon = open_unit("epsilon", epsilon)?;
        let delta = open_unit("delta", delta)?;
        Ok(Self {
            epsilon,
            delta,
            rejection_threshold: 1.0 / delta,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `1 / delta`.
    pub fn rejection_threshold(&self) -> f64 {
        self.rejection_threshold
    }

    /// `log(1 / delta)`, the rejection level for log-wealth.
    pub fn log_rejection_threshold(&self) -> f64 {
        self.rejection_threshold.ln()
    }
}

/// Strictly increasing candidate thresholds inside `[lo, hi] ⊆ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    values: Vec<f64>,
}

impl ThresholdGrid {
    /// `points` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::Grid(format!("[{lo}, {hi}] is not a sub-interval of [0, 1]")));
        }
        match points {
            0 => Err(Error::Grid("grid needs at least one point".into())),
            1 => Self::from_values(vec![lo]),
            n => {
                let step = (hi - lo) / (n - 1) as f64;
                let mut values: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
                values[n - 1] = hi;
                Self::from_values(values)
            }
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Grid("grid needs at least one point".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Grid(format!("threshold {v} is outside [0, 1]")));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Grid(format!(
                "thresholds must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.values[0]
    }

    pub fn hi(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Losses observed at one time step: `values[k][b]` is the loss of batch
/// element `b` under grid threshold `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub t: usize,
    pub values: Vec<Vec<f64>>,
}

impl LossRecord {
    /// Validates that every loss lies in `[0, 1]` and all batches share one size.
    pub fn new(t: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if t == 0 {
            return Err(Error::Domain {
                name: "time index",
                range: "[1, inf)",
                value: 0.0,
            });
        }
        let batch = values.first().map_or(0, Vec::len);
        if batch == 0 {
            return Err(Error::Empty("loss batch"));
        }
        for per_psi in &values {
            if per_psi.len() != batch {
                return Err(Error::BatchMismatch {
                    t,
                    expected: batch,
                    actual: per_psi.len(),
                });
            }
            for &z in per_psi {
                check_loss(z)?;
            }
        }
        Ok(Self { t, values })
    }

    pub fn batch_size(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Losses must lie in `[0, 1]`; anything else is a hard error.
#[inline]
pub fn check_loss(z: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&z) {
        Ok(z)
    } else {
        Err(Error::LossOutOfRange { value: z })
    }
}

/// Sliding window, batch size and burn-in shared by all trackers of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Number of most recent steps retained; `None` keeps the full history.
    pub window: Option<usize>,
    pub batch: usize,
    /// Steps during which stopping is suppressed.
    pub burn_in: usize,
    /// Also restrict the wealth itself to the last `window` increments.
    #[serde(default)]
    pub strict_window: bool,
}

impl WindowConfig {
    /// Burn-in defaults to `floor(100 / batch)`.
    pub fn new(window: Option<usize>, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::Domain {
                name: "batch size",
                range: "[1, inf)",
                value: 0.0,
            });
        }
        if window == Some(0) {
            return Err(Error::Domain {
                name: "window",
                range: "[1, inf)",
                value: 0.0,
            });
        }
        Ok(Self {
            window,
            batch,
            burn_in: default_burn_in(batch),
            strict_window: false,
        })
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_strict_window(mut self, strict: bool) -> Self {
        self.strict_window = strict;
        self
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window: None,
            batch: 1,
            burn_in: default_burn_in(1),
            strict_window: false,
        }
    }
}

pub fn default_burn_in(batch: usize) -> usize {
    100 / batch.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejection_threshold_is_inverse_delta() {
        for delta in [0.1, 0.05, 0.01, 0.3, 1e-6] {
            let spec = RiskSpec::new(0.1, delta).unwrap();
            assert_eq!(spec.rejection_threshold(), 1.0 / delta);
        }
    }

    #[test]
    fn spec_rejects_boundaries() {
        assert!(RiskSpec::new(0.0, 0.1).is_err());
        assert!(RiskSpec::new(1.0, 0.1).is_err());
        assert!(RiskSpec::new(0.1, 0.0).is_err());
        assert!(RiskSpec::new(0.1, 1.0).is_err());
        assert!(RiskSpec::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn spec_deserialization_validates() {
        let ok: RiskSpec = serde_json::from_str(r#"{"epsilon":0.1,"delta":0.1}"#).unwrap();
        assert_eq!(ok.rejection_threshold(), 10.0);
        assert!(serde_json::from_str::<RiskSpec>(r#"{"epsilon":1.5,"delta":0.1}"#).is_err());
    }

    #[test]
    fn linspace_grid() {
        let g = ThresholdGrid::linspace(0.0, 1.0, 101).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g.lo(), 0.0);
        assert_eq!(g.hi(), 1.0);
        assert!((g.values()[50] - 0.5).abs() < 1e-15);
        let naval = ThresholdGrid::linspace(0.0, 0.05, 51).unwrap();
        assert_eq!(naval.hi(), 0.05);
    }

    #[test]
    fn grid_rejects_duplicates_and_range() {
        assert!(ThresholdGrid::from_values(vec![0.1, 0.1]).is_err());
        assert!(ThresholdGrid::from_values(vec![0.2, 0.1]).is_err());
        assert!(ThresholdGrid::from_values(vec![0.2, 1.1]).is_err());
        assert!(ThresholdGrid::from_values(vec![]).is_err());
        assert!(ThresholdGrid::linspace(0.5, 0.2, 3).is_err());
    }

    #[test]
    fn burn_in_default() {
        assert_eq!(WindowConfig::new(None, 1).unwrap().burn_in, 100);
        assert_eq!(WindowConfig::new(None, 10).unwrap().burn_in, 10);
        assert_eq!(WindowConfig::new(Some(50), 50).unwrap().burn_in, 2);
        assert_eq!(WindowConfig::new(None, 3).unwrap().burn_in, 33);
        assert!(WindowConfig::new(Some(0), 1).is_err());
        assert!(WindowConfig::new(None, 0).is_err());
    }

    #[test]
    fn loss_record_validation() {
        assert!(LossRecord::new(1, vec![vec![0.0, 1.0], vec![0.5, 0.5]]).is_ok());
        assert!(matches!(
            LossRecord::new(1, vec![vec![1.2]]),
            Err(Error::LossOutOfRange { .. })
        ));
        assert!(LossRecord::new(1, vec![vec![0.0, 1.0], vec![0.5]]).is_err());
        assert!(LossRecord::new(0, vec![vec![0.0]]).is_err());
    }
}
