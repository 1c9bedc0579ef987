use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::check_loss;

/// Running mean and population variance of the retained loss history.
///
/// With a window of `S` the last `S` values are kept in a ring buffer and
/// the moments are those of exactly that buffer. Without a window all values
/// are summarised by Welford's recurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    window: Option<usize>,
    ring: VecDeque<f64>,
    count: u64,
    len: usize,
    mean: f64,
    m2: f64,
    evictions: usize,
}

impl RunningMoments {
    pub fn new(window: Option<usize>) -> Self {
        Self {
            window,
            ring: VecDeque::with_capacity(window.map_or(0, |s| s + 1)),
            count: 0,
            len: 0,
            mean: 0.0,
            m2: 0.0,
            evictions: 0,
        }
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    /// Observations consumed since construction or the last reset.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Observations currently retained (at most the window length).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mean(&self) -> Option<f64> {
        (self.len > 0).then_some(self.mean)
    }

    pub fn variance(&self) -> Option<f64> {
        (self.len > 0).then(|| (self.m2 / self.len as f64).max(0.0))
    }

    pub fn mean_or(&self, prior: f64) -> f64 {
        self.mean().unwrap_or(prior)
    }

    pub fn variance_or(&self, prior: f64) -> f64 {
        self.variance().unwrap_or(prior)
    }

    pub fn push(&mut self, z: f64) -> Result<()> {
        check_loss(z)?;
        self.count += 1;
        self.add(z);
        if let Some(s) = self.window {
            self.ring.push_back(z);
            if self.ring.len() > s {
                let old = self.ring.pop_front().expect("ring is non-empty");
                self.remove(old);
                self.evictions += 1;
                // Bound the rounding drift of add/remove with an exact refresh.
                if self.evictions >= s {
                    self.recompute();
                }
            }
        }
        if !self.mean.is_finite() || !self.m2.is_finite() {
            return Err(Error::NonFinite { what: "running moments" });
        }
        Ok(())
    }

    /// Returns an updated copy, leaving `self` untouched.
    pub fn updated(&self, z: f64) -> Result<Self> {
        let mut next = self.clone();
        next.push(z)?;
        Ok(next)
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.window);
    }

    fn add(&mut self, z: f64) {
        self.len += 1;
        let d = z - self.mean;
        self.mean += d / self.len as f64;
        self.m2 += d * (z - self.mean);
    }

    fn remove(&mut self, z: f64) {
        if self.len == 1 {
            self.len = 0;
            self.mean = 0.0;
            self.m2 = 0.0;
            return;
        }
        let n = self.len as f64;
        let mean_without = (n * self.mean - z) / (n - 1.0);
        self.m2 -= (z - self.mean) * (z - mean_without);
        self.mean = mean_without;
        self.len -= 1;
    }

    fn recompute(&mut self) {
        self.evictions = 0;
        self.len = 0;
        self.mean = 0.0;
        self.m2 = 0.0;
        let values: Vec<f64> = self.ring.iter().copied().collect();
        for z in values {
            self.add(z);
        }
    }
}
