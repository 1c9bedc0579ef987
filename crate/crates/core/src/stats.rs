//! Exact binomial bounds used to judge Monte-Carlo frequencies.

use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

/// One-sided Clopper-Pearson lower bound for `k` successes in `n` trials.
pub fn clopper_pearson_lower(k: u64, n: u64, confidence: f64) -> f64 {
    if k == 0 || n == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    Beta::new(k as f64, (n - k + 1) as f64)
        .map(|b| b.inverse_cdf(alpha))
        .unwrap_or(0.0)
}

/// One-sided Clopper-Pearson upper bound for `k` successes in `n` trials.
pub fn clopper_pearson_upper(k: u64, n: u64, confidence: f64) -> f64 {
    if n == 0 || k >= n {
        return 1.0;
    }
    Beta::new((k + 1) as f64, (n - k) as f64)
        .map(|b| b.inverse_cdf(confidence))
        .unwrap_or(1.0)
}

/// Smallest `c` with `P(Bin(n, p) <= c) >= confidence`: the largest count
/// still consistent with a success probability of at most `p`.
pub fn binomial_critical(n: u64, p: f64, confidence: f64) -> u64 {
    let Ok(dist) = Binomial::new(p, n) else {
        return n;
    };
    (0..=n).find(|&c| dist.cdf(c) >= confidence).unwrap_or(n)
}
