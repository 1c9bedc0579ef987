//! Evidence-accumulation processes, one state machine per threshold.
//!
//! Wealth kinds store `log M_t`; the risk estimators store the estimate
//! itself. Every step consumes the `B` losses of one batch. Payoffs use the
//! batch mean `zbar_t`, which for the multiplicative wealth is the same as
//! averaging the per-element factors `1 + lambda (z_b - eps)`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::betting::{max_rate, BettingStrategy, Direction};
use crate::error::{Error, Result};
use crate::moments::RunningMoments;
use crate::types::{check_loss, RiskSpec, WindowConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerKind {
    /// Multiplicative wealth `prod (1 + lambda (z - eps))`.
    WealthMult,
    /// Summation statistic `sum lambda (z - eps)` with a time-dependent boundary.
    WealthSum,
    /// Predictably-mixed empirical-Bernstein wealth.
    WealthEb,
    /// Windowed running mean of the losses, flagged when above `eps`.
    RunningRisk,
    /// Large fresh batch estimate of the instantaneous risk.
    OracleRisk,
    /// Reversed wealth `prod (1 + lambda (eps - z))` for i.i.d. streams.
    WealthReverseIid,
}

impl TrackerKind {
    pub const ALL: [TrackerKind; 6] = [
        TrackerKind::WealthMult,
        TrackerKind::WealthSum,
        TrackerKind::WealthEb,
        TrackerKind::RunningRisk,
        TrackerKind::OracleRisk,
        TrackerKind::WealthReverseIid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::WealthMult => "wealth_mult",
            TrackerKind::WealthSum => "wealth_sum",
            TrackerKind::WealthEb => "wealth_eb",
            TrackerKind::RunningRisk => "running_risk",
            TrackerKind::OracleRisk => "oracle_risk",
            TrackerKind::WealthReverseIid => "wealth_reverse_iid",
        }
    }

    /// Whether the stopping rule carries a false-alarm guarantee.
    pub fn has_guarantee(self) -> bool {
        matches!(
            self,
            TrackerKind::WealthMult | TrackerKind::WealthSum | TrackerKind::WealthEb
        )
    }

    pub fn is_wealth(self) -> bool {
        matches!(
            self,
            TrackerKind::WealthMult
                | TrackerKind::WealthSum
                | TrackerKind::WealthEb
                | TrackerKind::WealthReverseIid
        )
    }

    pub fn direction(self) -> Direction {
        match self {
            TrackerKind::WealthReverseIid => Direction::Control,
            _ => Direction::Violation,
        }
    }

    /// Strategy used when none is configured.
    pub fn default_strategy(self) -> BettingStrategy {
        match self {
            TrackerKind::WealthEb => BettingStrategy::eb_default(),
            _ => BettingStrategy::Agra,
        }
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrackerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wealth_mult" | "mult" => Ok(TrackerKind::WealthMult),
            "wealth_sum" | "sum" => Ok(TrackerKind::WealthSum),
            "wealth_eb" | "eb" => Ok(TrackerKind::WealthEb),
            "running_risk" | "running" => Ok(TrackerKind::RunningRisk),
            "oracle_risk" | "oracle" => Ok(TrackerKind::OracleRisk),
            "wealth_reverse_iid" | "reverse" => Ok(TrackerKind::WealthReverseIid),
            other => Err(format!("unknown tracker kind `{other}`")),
        }
    }
}

/// `sqrt(2 t log(1/delta))`, the Azuma-Hoeffding boundary of the summation
/// statistic after `t` unit-bounded increments.
pub fn azuma_boundary(spec: &RiskSpec, t: usize) -> f64 {
    (2.0 * t as f64 * spec.log_rejection_threshold()).sqrt()
}

/// `(-log(1 - lambda) - lambda) / 4`.
pub fn eb_rho(lambda: f64) -> f64 {
    (-(-lambda).ln_1p() - lambda) / 4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IncrementWindow {
    len: usize,
    increments: VecDeque<f64>,
}

/// Per-threshold state of one tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerState {
    kind: TrackerKind,
    value: f64,
    t: usize,
    moments: RunningMoments,
    stopped: bool,
    stop_time: Option<usize>,
    burn_in: usize,
    strict: Option<IncrementWindow>,
}

/// Serializable view of a tracker state at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerSnapshot {
    pub kind: TrackerKind,
    pub t: usize,
    /// `log M_t` for wealth kinds, the risk estimate otherwise.
    pub value: f64,
    pub stopped: bool,
    pub stop_time: Option<usize>,
}

impl TrackerState {
    pub fn new(kind: TrackerKind, window: &WindowConfig) -> Self {
        let strict = match (window.strict_window, window.window, kind.is_wealth()) {
            (true, Some(len), true) => Some(IncrementWindow {
                len,
                increments: VecDeque::with_capacity(len + 1),
            }),
            _ => None,
        };
        Self {
            kind,
            value: 0.0,
            t: 0,
            moments: RunningMoments::new(window.window),
            stopped: false,
            stop_time: None,
            burn_in: window.burn_in,
            strict,
        }
    }

    pub fn kind(&self) -> TrackerKind {
        self.kind
    }

    /// Steps consumed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn moments(&self) -> &RunningMoments {
        &self.moments
    }

    /// `log M_t` for wealth kinds, the risk estimate otherwise.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn log_wealth(&self) -> f64 {
        self.value
    }

    pub fn wealth(&self) -> f64 {
        self.value.exp()
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    pub fn stop_time(&self) -> Option<usize> {
        self.stop_time
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn snapshot(&self) -> TrackerSnapshot {
        TrackerSnapshot {
            kind: self.kind,
            t: self.t,
            value: self.value,
            stopped: self.stopped,
            stop_time: self.stop_time,
        }
    }

    fn expect_kind(&self, requested: TrackerKind) -> Result<()> {
        if self.kind == requested {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                actual: self.kind.name(),
                requested: requested.name(),
            })
        }
    }

    fn check_rate(&self, lambda: f64, bound: f64) -> Result<()> {
        if lambda >= 0.0 && lambda < bound {
            Ok(())
        } else {
            Err(Error::Domain {
                name: "betting rate",
                range: match self.kind {
                    TrackerKind::WealthEb => "[0, 1)",
                    TrackerKind::WealthReverseIid => "[0, 1/(1 - epsilon))",
                    _ => "[0, 1/epsilon)",
                },
                value: lambda,
            })
        }
    }

    fn accumulate(&mut self, increment: f64, mean: f64) -> Result<()> {
        if !increment.is_finite() {
            return Err(Error::NonFinite { what: self.kind.name() });
        }
        self.moments.push(mean)?;
        self.t += 1;
        match &mut self.strict {
            Some(w) => {
                w.increments.push_back(increment);
                if w.increments.len() > w.len {
                    w.increments.pop_front();
                }
                self.value = w.increments.iter().sum();
            }
            None => self.value += increment,
        }
        if !self.value.is_finite() {
            return Err(Error::NonFinite { what: self.kind.name() });
        }
        Ok(())
    }

    fn mark(&mut self, crossed: bool, respect_burn_in: bool) {
        if self.stopped || !crossed {
            return;
        }
        if respect_burn_in && self.t <= self.burn_in {
            return;
        }
        self.stopped = true;
        self.stop_time = Some(self.t);
    }

    fn batch_mean(losses: &[f64]) -> Result<f64> {
        if losses.is_empty() {
            return Err(Error::Empty("loss batch"));
        }
        let mut sum = 0.0;
        for &z in losses {
            sum += check_loss(z)?;
        }
        Ok(sum / losses.len() as f64)
    }

    /// Multiplies the wealth by `(1/B) sum_b (1 + lambda (z_b - eps))`.
    pub fn step_mult(&mut self, spec: &RiskSpec, lambda: f64, losses: &[f64]) -> Result<()> {
        self.expect_kind(TrackerKind::WealthMult)?;
        self.check_rate(lambda, max_rate(spec, Direction::Violation))?;
        let eps = spec.epsilon();
        let mean = Self::batch_mean(losses)?;
        let factor = losses
            .iter()
            .map(|&z| 1.0 + lambda * (z - eps))
            .sum::<f64>()
            / losses.len() as f64;
        self.accumulate(factor.ln(), mean)?;
        let crossed = self.value >= spec.log_rejection_threshold();
        self.mark(crossed, true);
        Ok(())
    }

    /// Adds `lambda (zbar - eps)`; stops when the sum reaches
    /// [`azuma_boundary`] for the number of accumulated increments.
    pub fn step_sum(&mut self, spec: &RiskSpec, lambda: f64, losses: &[f64]) -> Result<()> {
        self.expect_kind(TrackerKind::WealthSum)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain {
                name: "betting rate",
                range: "[0, inf)",
                value: lambda,
            });
        }
        let mean = Self::batch_mean(losses)?;
        self.accumulate(lambda * (mean - spec.epsilon()), mean)?;
        let terms = self.strict.as_ref().map_or(self.t, |w| w.increments.len());
        let crossed = self.value >= azuma_boundary(spec, terms);
        self.mark(crossed, true);
        Ok(())
    }

    /// Adds `lambda (zbar - eps) - v rho(lambda)` to the log-wealth, with
    /// `v = 4 (zbar - mu_{t-1})^2`.
    pub fn step_eb(&mut self, spec: &RiskSpec, lambda: f64, losses: &[f64]) -> Result<()> {
        self.expect_kind(TrackerKind::WealthEb)?;
        self.check_rate(lambda, 1.0)?;
        let mean = Self::batch_mean(losses)?;
        let prev_mean = self.moments.mean_or(spec.epsilon());
        let v = 4.0 * (mean - prev_mean).powi(2);
        let increment = lambda * (mean - spec.epsilon()) - v * eb_rho(lambda);
        self.accumulate(increment, mean)?;
        let crossed = self.value >= spec.log_rejection_threshold();
        self.mark(crossed, true);
        Ok(())
    }

    /// Running mean over the window; flags when strictly above `eps`.
    pub fn step_running(&mut self, spec: &RiskSpec, losses: &[f64]) -> Result<()> {
        self.expect_kind(TrackerKind::RunningRisk)?;
        let mean = Self::batch_mean(losses)?;
        self.moments.push(mean)?;
        self.t += 1;
        self.value = self.moments.mean_or(0.0);
        let crossed = self.value > spec.epsilon();
        self.mark(crossed, true);
        Ok(())
    }

    /// Mean of a fresh oracle batch; flags when strictly above `eps`.
    /// No burn-in applies.
    pub fn step_oracle(&mut self, spec: &RiskSpec, oracle_batch: &[f64]) -> Result<()> {
        self.expect_kind(TrackerKind::OracleRisk)?;
        let mean = Self::batch_mean(oracle_batch)?;
        self.t += 1;
        self.value = mean;
        let crossed = self.value > spec.epsilon();
        self.mark(crossed, false);
        Ok(())
    }

    /// Multiplies the reversed wealth by `(1/B) sum_b (1 + lambda (eps - z_b))`;
    /// reaching `1/delta` certifies the threshold as risk-controlling.
    pub fn step_reverse_iid(&mut self, spec: &RiskSpec, lambda: f64, losses: &[f64]) -> Result<()> {
        self.expect_kind(TrackerKind::WealthReverseIid)?;
        self.check_rate(lambda, max_rate(spec, Direction::Control))?;
        let eps = spec.epsilon();
        let mean = Self::batch_mean(losses)?;
        let factor = losses
            .iter()
            .map(|&z| 1.0 + lambda * (eps - z))
            .sum::<f64>()
            / losses.len() as f64;
        self.accumulate(factor.ln(), mean)?;
        let crossed = self.value >= spec.log_rejection_threshold();
        self.mark(crossed, true);
        Ok(())
    }
}

/// A tracker state bundled with the betting strategy that drives it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    state: TrackerState,
    strategy: BettingStrategy,
}

impl Tracker {
    pub fn new(
        kind: TrackerKind,
        strategy: BettingStrategy,
        spec: &RiskSpec,
        window: &WindowConfig,
    ) -> Result<Self> {
        if kind.is_wealth() {
            strategy.validate(spec, kind.direction())?;
            if kind == TrackerKind::WealthEb {
                if let BettingStrategy::Fixed { lambda } = strategy {
                    if lambda >= 1.0 {
                        return Err(Error::Domain {
                            name: "betting rate",
                            range: "[0, 1)",
                            value: lambda,
                        });
                    }
                }
            }
        }
        Ok(Self {
            state: TrackerState::new(kind, window),
            strategy,
        })
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn strategy(&self) -> BettingStrategy {
        self.strategy
    }

    /// Bet the next step will use, formed from the current history only.
    pub fn next_rate(&self, spec: &RiskSpec) -> f64 {
        self.strategy
            .rate(spec, &self.state.moments, self.state.t + 1, self.state.kind.direction())
    }

    /// Consumes one batch. For the oracle kind `losses` is the oracle batch.
    pub fn step(&mut self, spec: &RiskSpec, losses: &[f64]) -> Result<()> {
        match self.state.kind {
            TrackerKind::WealthMult => {
                let lambda = self.next_rate(spec);
                self.state.step_mult(spec, lambda, losses)
            }
            TrackerKind::WealthSum => {
                let lambda = self.next_rate(spec);
                self.state.step_sum(spec, lambda, losses)
            }
            TrackerKind::WealthEb => {
                let lambda = self.next_rate(spec);
                self.state.step_eb(spec, lambda, losses)
            }
            TrackerKind::WealthReverseIid => {
                let lambda = self.next_rate(spec);
                self.state.step_reverse_iid(spec, lambda, losses)
            }
            TrackerKind::RunningRisk => self.state.step_running(spec, losses),
            TrackerKind::OracleRisk => self.state.step_oracle(spec, losses),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> RiskSpec {
        RiskSpec::new(0.1, 0.1).unwrap()
    }

    fn no_burn_in() -> WindowConfig {
        WindowConfig::new(None, 1).unwrap().with_burn_in(0)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn mult_product_example() {
        let mut s = TrackerState::new(TrackerKind::WealthMult, &no_burn_in());
        assert_eq!(s.wealth(), 1.0);
        s.step_mult(&spec(), 0.5, &[1.0]).unwrap();
        assert!(rel(s.wealth(), 1.45) < 1e-12);
        s.step_mult(&spec(), 0.5, &[1.0]).unwrap();
        assert!(rel(s.wealth(), 2.1025) < 1e-12);
    }

    #[test]
    fn mult_zero_bet_stays_one() {
        let mut s = TrackerState::new(TrackerKind::WealthMult, &no_burn_in());
        for z in [0.0, 1.0, 0.3, 1.0] {
            s.step_mult(&spec(), 0.0, &[z]).unwrap();
            assert_eq!(s.wealth(), 1.0);
        }
    }

    #[test]
    fn mult_stops_at_seven() {
        let mut s = TrackerState::new(TrackerKind::WealthMult, &no_burn_in());
        for t in 1..=10 {
            s.step_mult(&spec(), 0.5, &[1.0]).unwrap();
            if t < 7 {
                assert!(!s.stopped(), "t={t}");
            }
        }
        assert_eq!(s.stop_time(), Some(7));
        assert!(1.45f64.powi(6) < 10.0 && 1.45f64.powi(7) >= 10.0);
    }

    #[test]
    fn burn_in_suppresses_stop() {
        let w = WindowConfig::new(None, 1).unwrap().with_burn_in(20);
        let mut s = TrackerState::new(TrackerKind::WealthMult, &w);
        for _ in 0..30 {
            s.step_mult(&spec(), 0.5, &[1.0]).unwrap();
        }
        assert_eq!(s.stop_time(), Some(21));
    }

    #[test]
    fn mult_rejects_bad_inputs() {
        let mut s = TrackerState::new(TrackerKind::WealthMult, &no_burn_in());
        assert!(s.step_mult(&spec(), 10.0, &[1.0]).is_err());
        assert!(s.step_mult(&spec(), 0.5, &[1.2]).is_err());
        assert!(s.step_mult(&spec(), 0.5, &[]).is_err());
        assert!(matches!(
            s.step_sum(&spec(), 0.5, &[1.0]),
            Err(Error::KindMismatch { .. })
        ));
        assert_eq!(s.t(), 0);
    }

    #[test]
    fn sum_examples() {
        let mut s = TrackerState::new(TrackerKind::WealthSum, &no_burn_in());
        s.step_sum(&spec(), 1.0, &[0.0]).unwrap();
        s.step_sum(&spec(), 1.0, &[1.0]).unwrap();
        assert!((s.value() - 0.8).abs() < 1e-12);

        let mut s = TrackerState::new(TrackerKind::WealthSum, &no_burn_in());
        for _ in 0..500 {
            s.step_sum(&spec(), 2.0, &[0.1]).unwrap();
        }
        assert!(s.value().abs() < 1e-12);
        assert!(!s.stopped());

        let eta = azuma_boundary(&spec(), 100);
        assert!((eta - (200.0 * 10f64.ln()).sqrt()).abs() < 1e-12);
        assert!((eta - 21.46).abs() < 5e-3);
    }

    #[test]
    fn sum_stops_against_growing_boundary() {
        // Increment 0.9 per step: stops at the first t with 0.9 t >= sqrt(2 t log 10).
        let mut s = TrackerState::new(TrackerKind::WealthSum, &no_burn_in());
        for _ in 0..20 {
            s.step_sum(&spec(), 1.0, &[1.0]).unwrap();
        }
        let expected = (1..).find(|&t| 0.9 * t as f64 >= azuma_boundary(&spec(), t)).unwrap();
        assert_eq!(s.stop_time(), Some(expected));
        assert_eq!(expected, 6);
    }

    #[test]
    fn eb_examples() {
        let mut s = TrackerState::new(TrackerKind::WealthEb, &no_burn_in());
        for z in [0.3, 1.0, 0.0] {
            s.step_eb(&spec(), 0.0, &[z]).unwrap();
            assert_eq!(s.wealth(), 1.0);
        }

        // mu_{t-1} = 0.1 from a single prior observation.
        let mut s = TrackerState::new(TrackerKind::WealthEb, &no_burn_in());
        s.step_eb(&spec(), 0.0, &[0.1]).unwrap();
        s.step_eb(&spec(), 0.5, &[1.0]).unwrap();
        let rho = (2f64.ln() - 0.5) / 4.0;
        assert!((rho - 0.048_286).abs() < 1e-6);
        let want = 0.45 - 4.0 * 0.81 * rho;
        assert!(rel(s.log_wealth(), want) < 1e-12);
        assert!((s.log_wealth() - 0.293_550_783_746_444).abs() < 1e-12);

        assert!(s.step_eb(&spec(), 1.0, &[1.0]).is_err());
    }

    #[test]
    fn eb_increment_bounded_by_linear_term() {
        let mut s = TrackerState::new(TrackerKind::WealthEb, &no_burn_in());
        let zs = [0.0, 1.0, 0.5, 0.2, 0.9, 0.0, 1.0];
        for (i, &z) in zs.iter().enumerate() {
            let before = s.log_wealth();
            let lam = 0.1 * i as f64;
            s.step_eb(&spec(), lam, &[z]).unwrap();
            assert!(s.log_wealth() - before <= lam * (z - 0.1) + 1e-15);
        }
    }

    #[test]
    fn running_examples() {
        let mut s = TrackerState::new(TrackerKind::RunningRisk, &no_burn_in());
        for z in [0.0, 0.0, 1.0] {
            s.step_running(&spec(), &[z]).unwrap();
        }
        assert!((s.value() - 1.0 / 3.0).abs() < 1e-15);

        let w = WindowConfig::new(Some(2), 1).unwrap().with_burn_in(0);
        let mut s = TrackerState::new(TrackerKind::RunningRisk, &w);
        for z in [1.0, 0.0, 0.0] {
            s.step_running(&spec(), &[z]).unwrap();
        }
        assert_eq!(s.value(), 0.0);
        assert_eq!(s.stop_time(), Some(1));

        let mut s = TrackerState::new(TrackerKind::RunningRisk, &no_burn_in());
        for _ in 0..100 {
            s.step_running(&spec(), &[0.1]).unwrap();
        }
        assert!(!s.stopped());
    }

    #[test]
    fn oracle_examples() {
        let mut s = TrackerState::new(TrackerKind::OracleRisk, &WindowConfig::default());
        s.step_oracle(&spec(), &vec![0.0; 1000]).unwrap();
        assert_eq!(s.value(), 0.0);
        assert!(!s.stopped());
        s.step_oracle(&spec(), &[1.0]).unwrap();
        // Burn-in does not apply to the oracle.
        assert_eq!(s.stop_time(), Some(2));
        assert!(s.step_oracle(&spec(), &[]).is_err());
    }

    #[test]
    fn reverse_examples() {
        let mut s = TrackerState::new(TrackerKind::WealthReverseIid, &no_burn_in());
        for t in 1..=60 {
            s.step_reverse_iid(&spec(), 0.5, &[0.0]).unwrap();
            assert!(rel(s.wealth(), 1.05f64.powi(t)) < 1e-9);
        }
        assert_eq!(s.stop_time(), Some(48));
        assert!(1.05f64.powi(47) < 10.0 && 1.05f64.powi(48) >= 10.0);

        let mut s = TrackerState::new(TrackerKind::WealthReverseIid, &no_burn_in());
        for _ in 0..50 {
            s.step_reverse_iid(&spec(), 0.9, &[0.1]).unwrap();
        }
        assert!(s.log_wealth().abs() < 1e-12);
        assert!(s.step_reverse_iid(&spec(), 1.0 / 0.9, &[0.0]).is_err());
    }

    #[test]
    fn batched_constant_losses_match_unbatched() {
        for kind in [TrackerKind::WealthMult, TrackerKind::WealthSum, TrackerKind::WealthEb] {
            let mut single = Tracker::new(kind, kind.default_strategy(), &spec(), &no_burn_in()).unwrap();
            let w = WindowConfig::new(None, 7).unwrap().with_burn_in(0);
            let mut batched = Tracker::new(kind, kind.default_strategy(), &spec(), &w).unwrap();
            for &z in &[0.3, 0.3, 0.8, 0.0, 1.0, 0.25] {
                single.step(&spec(), &[z]).unwrap();
                batched.step(&spec(), &[z; 7]).unwrap();
                assert!((single.state().value() - batched.state().value()).abs() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn strict_window_restricts_wealth() {
        let w = WindowConfig::new(Some(3), 1).unwrap().with_burn_in(0).with_strict_window(true);
        let mut s = TrackerState::new(TrackerKind::WealthMult, &w);
        for _ in 0..10 {
            s.step_mult(&spec(), 0.5, &[1.0]).unwrap();
        }
        assert!(rel(s.wealth(), 1.45f64.powi(3)) < 1e-12);
        assert!(!s.stopped());
    }

    #[test]
    fn tracker_rate_is_formed_before_consuming() {
        let w = no_burn_in();
        let mut tr = Tracker::new(TrackerKind::WealthMult, BettingStrategy::Agra, &spec(), &w).unwrap();
        // Empty history: mu_0 = eps, so the first bet is zero whatever z_1 is.
        tr.step(&spec(), &[1.0]).unwrap();
        assert_eq!(tr.state().wealth(), 1.0);
        let lam = tr.next_rate(&spec());
        assert!((lam - 0.9 / 0.81).abs() < 1e-12);
        tr.step(&spec(), &[1.0]).unwrap();
        assert!(rel(tr.state().wealth(), 1.0 + lam * 0.9) < 1e-12);
    }

    #[test]
    fn eb_tracker_rejects_unit_bet() {
        let w = no_burn_in();
        assert!(Tracker::new(TrackerKind::WealthEb, BettingStrategy::Fixed { lambda: 1.0 }, &spec(), &w).is_err());
        assert!(Tracker::new(TrackerKind::WealthEb, BettingStrategy::Fixed { lambda: 0.9 }, &spec(), &w).is_ok());
    }

    proptest! {
        #[test]
        fn log_space_matches_direct_product(zs in proptest::collection::vec(0.0f64..=1.0, 1..1000),
                                            lam_frac in 0.0f64..0.9) {
            let lam = lam_frac / 0.1;
            let mut s = TrackerState::new(TrackerKind::WealthMult, &no_burn_in());
            let mut direct = 1.0f64;
            for &z in &zs {
                s.step_mult(&spec(), lam, &[z]).unwrap();
                direct *= 1.0 + lam * (z - 0.1);
            }
            if direct > 1e-300 && direct < 1e300 {
                prop_assert!(rel(s.wealth(), direct) < 1e-9);
            }
        }

        #[test]
        fn stop_is_absorbing(zs in proptest::collection::vec(0.0f64..=1.0, 1..400),
                             kind_idx in 0usize..5, burn in 0usize..20) {
            let kind = [TrackerKind::WealthMult, TrackerKind::WealthSum, TrackerKind::WealthEb,
                        TrackerKind::RunningRisk, TrackerKind::WealthReverseIid][kind_idx];
            let w = WindowConfig::new(Some(10), 1).unwrap().with_burn_in(burn);
            let mut tr = Tracker::new(kind, kind.default_strategy(), &spec(), &w).unwrap();
            let mut first: Option<usize> = None;
            for &z in &zs {
                tr.step(&spec(), &[z]).unwrap();
                let st = tr.state();
                if let Some(f) = first {
                    prop_assert!(st.stopped());
                    prop_assert_eq!(st.stop_time(), Some(f));
                } else if st.stopped() {
                    first = st.stop_time();
                    prop_assert!(first.unwrap() > burn);
                }
                if kind == TrackerKind::RunningRisk {
                    prop_assert!((0.0..=1.0).contains(&st.value()));
                }
            }
        }
    }
}
