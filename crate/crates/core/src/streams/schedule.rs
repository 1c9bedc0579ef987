use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outlier mixture weight `pi_out(t)` over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftSchedule {
    /// No shift: `pi_out = 0` throughout.
    Iid,
    /// `pi_out = 1` from step `start` on, 0 before.
    Immediate {
        #[serde(default = "default_start")]
        start: usize,
    },
    /// `pi_out` grows by `increment` every `t_out` steps, capped at 1.
    Stepwise {
        #[serde(default = "default_t_out")]
        t_out: usize,
        #[serde(default = "default_increment")]
        increment: f64,
    },
    /// Explicit per-step weights; the last value is held past the end.
    Custom { pi_out: Vec<f64> },
}

fn default_start() -> usize {
    1
}

fn default_t_out() -> usize {
    200
}

fn default_increment() -> f64 {
    0.05
}

impl Default for ShiftSchedule {
    fn default() -> Self {
        ShiftSchedule::stepwise(default_t_out())
    }
}

impl ShiftSchedule {
    pub fn stepwise(t_out: usize) -> Self {
        ShiftSchedule::Stepwise {
            t_out,
            increment: default_increment(),
        }
    }

    /// Weight rising to `peak` by `turn`, dipping to `trough` until
    /// `recover`, then climbing linearly to 1 at `end`.
    pub fn dip_then_rise(peak: f64, trough: f64, turn: usize, recover: usize, end: usize) -> Self {
        let pi_out = (1..=end)
            .map(|t| {
                if t <= turn {
                    peak * t as f64 / turn as f64
                } else if t <= recover {
                    trough
                } else {
                    trough + (1.0 - trough) * (t - recover) as f64 / (end - recover).max(1) as f64
                }
            })
            .collect();
        ShiftSchedule::Custom { pi_out }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShiftSchedule::Iid => "iid",
            ShiftSchedule::Immediate { .. } => "immediate",
            ShiftSchedule::Stepwise { .. } => "stepwise",
            ShiftSchedule::Custom { .. } => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value| Err(Error::Domain { name, range: "[0, 1]", value });
        match self {
            ShiftSchedule::Iid => Ok(()),
            ShiftSchedule::Immediate { start } if *start == 0 => Err(Error::Domain {
                name: "shift start",
                range: "[1, inf)",
                value: 0.0,
            }),
            ShiftSchedule::Immediate { .. } => Ok(()),
            ShiftSchedule::Stepwise { t_out, .. } if *t_out == 0 => Err(Error::Domain {
                name: "t_out",
                range: "[1, inf)",
                value: 0.0,
            }),
            ShiftSchedule::Stepwise { increment, .. } if !(0.0..=1.0).contains(increment) => {
                bad("stepwise increment", *increment)
            }
            ShiftSchedule::Stepwise { .. } => Ok(()),
            ShiftSchedule::Custom { pi_out } => {
                if pi_out.is_empty() {
                    return Err(Error::Empty("custom schedule"));
                }
                match pi_out.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    Some(&p) => bad("pi_out", p),
                    None => Ok(()),
                }
            }
        }
    }

    /// Outlier weight at 1-based step `t`.
    pub fn pi_out(&self, t: usize) -> f64 {
        match self {
            ShiftSchedule::Iid => 0.0,
            ShiftSchedule::Immediate { start } => {
                if t >= *start {
                    1.0
                } else {
                    0.0
                }
            }
            ShiftSchedule::Stepwise { t_out, increment } => {
                let level = t.saturating_sub(1) / *t_out;
                (increment * level as f64).min(1.0)
            }
            ShiftSchedule::Custom { pi_out } => {
                let i = t.saturating_sub(1).min(pi_out.len() - 1);
                pi_out[i]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepwise_levels() {
        let s = ShiftSchedule::stepwise(200);
        assert_eq!(s.pi_out(1), 0.0);
        assert_eq!(s.pi_out(200), 0.0);
        assert!((s.pi_out(201) - 0.05).abs() < 1e-15);
        assert!((s.pi_out(1500) - 0.35).abs() < 1e-12);
        assert_eq!(s.pi_out(100_000), 1.0);
    }

    #[test]
    fn iid_and_immediate() {
        assert!((1..1000).all(|t| ShiftSchedule::Iid.pi_out(t) == 0.0));
        let s = ShiftSchedule::Immediate { start: 5 };
        assert_eq!(s.pi_out(4), 0.0);
        assert_eq!(s.pi_out(5), 1.0);
        assert_eq!(ShiftSchedule::Immediate { start: 1 }.pi_out(1), 1.0);
    }

    #[test]
    fn schedules_stay_in_unit_interval() {
        let all = [
            ShiftSchedule::Iid,
            ShiftSchedule::Immediate { start: 3 },
            ShiftSchedule::stepwise(7),
            ShiftSchedule::dip_then_rise(0.4, 0.2, 365, 730, 1825),
        ];
        for s in &all {
            s.validate().unwrap();
            for t in 1..3000 {
                assert!((0.0..=1.0).contains(&s.pi_out(t)));
            }
        }
    }

    #[test]
    fn dip_then_rise_is_non_monotone() {
        let s = ShiftSchedule::dip_then_rise(0.4, 0.2, 100, 200, 400);
        assert!(s.pi_out(100) > s.pi_out(150));
        assert!(s.pi_out(400) > s.pi_out(100));
        assert_eq!(s.pi_out(400), 1.0);
    }

    #[test]
    fn invalid_schedules() {
        assert!(ShiftSchedule::Custom { pi_out: vec![] }.validate().is_err());
        assert!(ShiftSchedule::Custom { pi_out: vec![0.5, 1.5] }.validate().is_err());
        assert!(ShiftSchedule::Stepwise { t_out: 0, increment: 0.05 }.validate().is_err());
        assert!(ShiftSchedule::Immediate { start: 0 }.validate().is_err());
    }
}
