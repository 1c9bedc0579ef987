//! Predictable betting rates.
//!
//! Every rate here is a function of the risk specification and of moments
//! summarising `z_1..z_{t-1}` only. Trackers form the rate for step `t`
//! before the step-`t` loss is consumed, so the step-`t` loss can never leak
//! into its own bet.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::RunningMoments;
use crate::types::RiskSpec;

/// Variance assumed before any observation: the largest variance a
/// `[0, 1]`-bounded loss can have.
pub const PRIOR_VARIANCE: f64 = 0.25;

/// Floor for the variance in the empirical-Bernstein rate denominator.
pub const EB_VARIANCE_FLOOR: f64 = 1e-6;

/// Default cap `c` for the empirical-Bernstein plug-in rate.
pub const EB_DEFAULT_CAP: f64 = 0.5;

/// Which side of `epsilon` the wealth bets on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Payoff `z - epsilon`: wealth grows on evidence of risk violation.
    Violation,
    /// Payoff `epsilon - z`: wealth grows on evidence of risk control.
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BettingStrategy {
    Fixed { lambda: f64 },
    #[default]
    Agra,
    EbPlugin { cap: f64 },
}

impl BettingStrategy {
    pub fn eb_default() -> Self {
        BettingStrategy::EbPlugin { cap: EB_DEFAULT_CAP }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BettingStrategy::Fixed { .. } => "fixed",
            BettingStrategy::Agra => "agra",
            BettingStrategy::EbPlugin { .. } => "eb_plugin",
        }
    }

    /// Checks the strategy constants against the wealth domain for `direction`.
    pub fn validate(&self, spec: &RiskSpec, direction: Direction) -> Result<()> {
        match *self {
            BettingStrategy::Fixed { lambda } => {
                let bound = max_rate(spec, direction);
                rate_fixed_bounded(lambda, bound).map(|_| ())
            }
            BettingStrategy::Agra => Ok(()),
            BettingStrategy::EbPlugin { cap } => {
                if cap > 0.0 && cap < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain {
                        name: "EB cap c",
                        range: "(0, 1)",
                        value: cap,
                    })
                }
            }
        }
    }

    /// Bet for step `t` (1-based) given moments over steps before `t`.
    pub fn rate(
        &self,
        spec: &RiskSpec,
        moments: &RunningMoments,
        t: usize,
        direction: Direction,
    ) -> f64 {
        match *self {
            BettingStrategy::Fixed { lambda } => lambda,
            BettingStrategy::Agra => match direction {
                Direction::Violation => rate_agra(spec, moments),
                Direction::Control => rate_agra_reverse(spec, moments),
            },
            BettingStrategy::EbPlugin { cap } => rate_eb_capped(spec, moments, t, cap),
        }
    }
}

/// Exclusive upper bound on the bet keeping every wealth factor positive.
pub fn max_rate(spec: &RiskSpec, direction: Direction) -> f64 {
    match direction {
        Direction::Violation => 1.0 / spec.epsilon(),
        Direction::Control => 1.0 / (1.0 - spec.epsilon()),
    }
}

fn agra_closed_form(edge: f64, variance: f64, cap: f64) -> f64 {
    let denom = variance + edge * edge;
    if denom <= 0.0 {
        // sigma^2 = 0 and mu = epsilon: the zero numerator wins.
        return 0.0;
    }
    (edge / denom).min(cap).max(0.0)
}

/// `max{0, min{(mu - eps) / (sigma^2 + (mu - eps)^2), (1/2) / eps}}`.
pub fn rate_agra(spec: &RiskSpec, moments: &RunningMoments) -> f64 {
    let eps = spec.epsilon();
    let mu = moments.mean_or(eps);
    let var = moments.variance_or(PRIOR_VARIANCE);
    agra_closed_form(mu - eps, var, 0.5 / eps)
}

/// Mirror of [`rate_agra`] for the control-direction wealth, capped at
/// half of `1 / (1 - eps)`.
pub fn rate_agra_reverse(spec: &RiskSpec, moments: &RunningMoments) -> f64 {
    let eps = spec.epsilon();
    let mu = moments.mean_or(eps);
    let var = moments.variance_or(PRIOR_VARIANCE);
    agra_closed_form(eps - mu, var, 0.5 / (1.0 - eps))
}

/// Empirical-Bernstein plug-in rate with the default cap of one half.
pub fn rate_eb(spec: &RiskSpec, moments: &RunningMoments, t: usize) -> f64 {
    rate_eb_capped(spec, moments, t, EB_DEFAULT_CAP)
}

/// `min{sqrt(2 log(2/delta) / (sigma^2 t log(1 + t))), c}`.
pub fn rate_eb_capped(spec: &RiskSpec, moments: &RunningMoments, t: usize, cap: f64) -> f64 {
    let t = t.max(1) as f64;
    let var = moments.variance_or(PRIOR_VARIANCE).max(EB_VARIANCE_FLOOR);
    let num = 2.0 * (2.0 / spec.delta()).ln();
    let denom = var * t * t.ln_1p();
    (num / denom).sqrt().min(cap)
}

/// Validates a constant bet against `[0, 1/eps)`.
pub fn rate_fixed(spec: &RiskSpec, lambda: f64) -> Result<f64> {
    rate_fixed_bounded(lambda, 1.0 / spec.epsilon())
}

fn rate_fixed_bounded(lambda: f64, bound: f64) -> Result<f64> {
    if lambda >= 0.0 && lambda < bound {
        Ok(lambda)
    } else {
        Err(Error::Domain {
            name: "betting rate",
            range: "[0, 1/epsilon)",
            value: lambda,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn moments_of(values: &[f64]) -> RunningMoments {
        let mut m = RunningMoments::new(None);
        for &z in values {
            m.push(z).unwrap();
        }
        m
    }

    /// Moments with a prescribed mean and variance: two-point history.
    fn moments_with(mean: f64, var: f64) -> RunningMoments {
        let sd = var.sqrt();
        moments_of(&[mean - sd, mean + sd])
    }

    fn spec(eps: f64, delta: f64) -> RiskSpec {
        RiskSpec::new(eps, delta).unwrap()
    }

    #[test]
    fn agra_closed_form_example() {
        let m = moments_with(0.5, 0.05);
        let got = rate_agra(&spec(0.1, 0.1), &m);
        let want = 0.4 / (0.05 + 0.16);
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
        assert!((got - 1.904_761_904_761_904_7).abs() < 1e-9);
    }

    #[test]
    fn agra_zero_edge() {
        let m = moments_with(0.1, 0.005);
        assert!(rate_agra(&spec(0.1, 0.1), &m).abs() < 1e-12);
        // Degenerate: sigma^2 = 0 and mu = eps.
        let m = moments_of(&[0.25, 0.25]);
        assert_eq!(rate_agra(&spec(0.25, 0.1), &m), 0.0);
        // Empty history: mu_0 = eps gives a zero bet.
        assert_eq!(rate_agra(&spec(0.1, 0.1), &RunningMoments::new(None)), 0.0);
    }

    #[test]
    fn agra_constant_ones() {
        let m = moments_of(&[1.0, 1.0, 1.0]);
        let got = rate_agra(&spec(0.1, 0.1), &m);
        assert!((got - 0.9 / 0.81).abs() < 1e-12);
        assert!((got - 1.111_111_111_111).abs() < 1e-9);
    }

    #[test]
    fn agra_cap_and_floor() {
        let m = moments_of(&[0.15, 0.15]);
        // edge 0.1, variance 0: 1 / 0.1 = 10 capped at 0.5 / 0.05.
        assert_eq!(rate_agra(&spec(0.05, 0.1), &m), 10.0);
        let m = moments_of(&[0.0, 0.0]);
        assert_eq!(rate_agra(&spec(0.1, 0.1), &m), 0.0);
        assert!(rate_agra_reverse(&spec(0.1, 0.1), &m) > 0.0);
    }

    #[test]
    fn eb_example_capped() {
        let m = RunningMoments::new(None);
        let raw = (2.0 * 20f64.ln() / (0.25 * 2f64.ln())).sqrt();
        assert!((raw - 5.880_087_138_733_481).abs() < 1e-12);
        assert_eq!(rate_eb(&spec(0.1, 0.1), &m, 1), 0.5);
    }

    #[test]
    fn eb_example_uncapped_late() {
        let m = moments_of(&[0.0, 1.0]);
        let got = rate_eb(&spec(0.1, 0.1), &m, 1_000_000);
        let want = (2.0 * 20f64.ln() / (0.25 * 1e6 * 1_000_001f64.ln())).sqrt();
        assert!(got < 0.01);
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn eb_zero_variance_uses_floor() {
        let m = moments_of(&[0.3, 0.3, 0.3]);
        let got = rate_eb_capped(&spec(0.1, 0.1), &m, 1_000_000_000, 0.9);
        assert!(got.is_finite());
        let want = (2.0 * 20f64.ln() / (1e-6 * 1e9 * (1e9f64 + 1.0).ln())).sqrt();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn fixed_rate_bounds() {
        let s = spec(0.1, 0.1);
        assert_eq!(rate_fixed(&s, 0.0).unwrap(), 0.0);
        assert_eq!(rate_fixed(&s, 0.5).unwrap(), 0.5);
        assert!(rate_fixed(&s, 10.0).is_err());
        assert!(rate_fixed(&s, -0.1).is_err());
        let fixed = BettingStrategy::Fixed { lambda: 0.5 };
        let m = moments_of(&[1.0; 4]);
        for t in 1..10 {
            assert_eq!(fixed.rate(&s, &m, t, Direction::Violation), 0.5);
        }
    }

    #[test]
    fn strategy_validation() {
        let s = spec(0.1, 0.1);
        assert!(BettingStrategy::Fixed { lambda: 9.9 }.validate(&s, Direction::Violation).is_ok());
        assert!(BettingStrategy::Fixed { lambda: 9.9 }.validate(&s, Direction::Control).is_err());
        assert!(BettingStrategy::EbPlugin { cap: 1.0 }.validate(&s, Direction::Violation).is_err());
        assert!(BettingStrategy::eb_default().validate(&s, Direction::Violation).is_ok());
    }

    #[test]
    fn predictable_rate_is_deterministic_in_prefix() {
        let s = spec(0.1, 0.1);
        let history = [0.0, 1.0, 1.0, 0.0, 1.0, 0.3];
        for strategy in [BettingStrategy::Agra, BettingStrategy::eb_default()] {
            for t in 1..=history.len() {
                let a = strategy.rate(&s, &moments_of(&history[..t - 1]), t, Direction::Violation);
                let b = strategy.rate(&s, &moments_of(&history[..t - 1]), t, Direction::Violation);
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    /// AGRA is the maximiser of the second-order expansion
    /// `lambda * E[z - eps] - lambda^2 * E[(z - eps)^2] / 2` inside its cap.
    #[test]
    fn agra_maximises_quadratic_growth() {
        let s = spec(0.1, 0.1);
        for (mean, var) in [(0.2, 0.02), (0.35, 0.1), (0.25, 0.05), (0.5, 0.2)] {
            let m = moments_with(mean, var);
            let lam = rate_agra(&s, &m);
            let edge = mean - 0.1;
            let q = |l: f64| l * edge - l * l * (var + edge * edge) / 2.0;
            let best = (0..=50_000)
                .map(|i| i as f64 * 5.0 / 50_000.0)
                .max_by(|a, b| q(*a).partial_cmp(&q(*b)).unwrap())
                .unwrap();
            assert!((lam - best).abs() < 2e-4, "mean={mean} var={var}: {lam} vs {best}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn rates_in_range(values in proptest::collection::vec(0.0f64..=1.0, 0..50),
                          eps in 0.01f64..0.99, delta in 0.001f64..0.99, t in 1usize..100_000) {
            let s = spec(eps, delta);
            let m = moments_of(&values);
            let a = rate_agra(&s, &m);
            prop_assert!(a >= 0.0 && a <= 0.5 / eps);
            prop_assert!(a < 1.0 / eps);
            let r = rate_agra_reverse(&s, &m);
            prop_assert!(r >= 0.0 && r < 1.0 / (1.0 - eps));
            let e = rate_eb(&s, &m, t);
            prop_assert!((0.0..=0.5).contains(&e));
        }
    }

    /// 10^5 random histories, all strategies in range.
    #[test]
    fn rates_in_range_bulk() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let s = spec(0.1, 0.1);
        for _ in 0..100_000 {
            let n = rng.random_range(0..20);
            let m = moments_of(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
            let a = rate_agra(&s, &m);
            assert!((0.0..=5.0).contains(&a));
            let e = rate_eb(&s, &m, rng.random_range(1..10_000));
            assert!((0.0..=0.5).contains(&e));
        }
    }
}
