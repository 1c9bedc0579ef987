use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaCdf, ContinuousCDF};

use super::loss::{ScoreRecord, Source, Task};
use super::schedule::ShiftSchedule;
use super::{StepInput, Truth};
use crate::error::{Error, Result};
use crate::types::{LossRecord, ThresholdGrid};

/// Distribution of scores for one mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorePool {
    Beta { a: f64, b: f64 },
    /// Resampled uniformly, e.g. scores exported from a real model.
    Empirical { scores: Vec<f64> },
}

impl ScorePool {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScorePool::Beta { a, b } => {
                for (name, v) in [("beta shape a", *a), ("beta shape b", *b)] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::Domain {
                            name,
                            range: "(0, inf)",
                            value: v,
                        });
                    }
                }
                Ok(())
            }
            ScorePool::Empirical { scores } => {
                if scores.is_empty() {
                    return Err(Error::Empty("score pool"));
                }
                match scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                    Some(&s) => Err(Error::Domain {
                        name: "pool score",
                        range: "[0, 1]",
                        value: s,
                    }),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            ScorePool::Beta { a, b } => {
                let dist = Beta::new(*a, *b).map_err(|_| Error::Domain {
                    name: "beta shape",
                    range: "(0, inf)",
                    value: a.min(*b),
                })?;
                Ok(dist.sample(rng))
            }
            ScorePool::Empirical { scores } => {
                if scores.is_empty() {
                    return Err(Error::Empty("score pool"));
                }
                Ok(scores[rng.random_range(0..scores.len())])
            }
        }
    }

    /// `P(s < psi)`.
    pub fn prob_below(&self, psi: f64) -> Result<f64> {
        self.validate()?;
        match self {
            ScorePool::Beta { a, b } => {
                let dist = BetaCdf::new(*a, *b).map_err(|_| Error::Domain {
                    name: "beta shape",
                    range: "(0, inf)",
                    value: a.min(*b),
                })?;
                Ok(dist.cdf(psi))
            }
            ScorePool::Empirical { scores } => {
                Ok(scores.iter().filter(|&&s| s < psi).count() as f64 / scores.len() as f64)
            }
        }
    }

    /// `P(s >= psi)`.
    pub fn prob_at_least(&self, psi: f64) -> Result<f64> {
        Ok(1.0 - self.prob_below(psi)?)
    }

    /// `P(s > psi)`; equals [`Self::prob_at_least`] for continuous pools.
    pub fn prob_above(&self, psi: f64) -> Result<f64> {
        match self {
            ScorePool::Beta { .. } => self.prob_at_least(psi),
            ScorePool::Empirical { scores } => {
                self.validate()?;
                Ok(scores.iter().filter(|&&s| s > psi).count() as f64 / scores.len() as f64)
            }
        }
    }
}

/// Two-component mixture whose outlier weight follows a [`ShiftSchedule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSampler {
    pub schedule: ShiftSchedule,
    pub inlier: ScorePool,
    pub outlier: ScorePool,
}

impl MixtureSampler {
    pub fn new(schedule: ShiftSchedule, inlier: ScorePool, outlier: ScorePool) -> Result<Self> {
        schedule.validate()?;
        inlier.validate()?;
        outlier.validate()?;
        Ok(Self {
            schedule,
            inlier,
            outlier,
        })
    }

    /// Source drawn from `Bernoulli(pi_out(t))`, then a score from its pool.
    pub fn sample_mixture<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<(Source, f64)> {
        let pi = self.schedule.pi_out(t);
        let source = if rng.random::<f64>() < pi { Source::Out } else { Source::In };
        let pool = match source {
            Source::In => &self.inlier,
            Source::Out => &self.outlier,
        };
        Ok((source, pool.sample(rng)?))
    }

    /// One record at time `t` in the layout `task` expects. For regression
    /// the draw is an absolute residual around a zero prediction.
    pub fn sample_record<R: Rng + ?Sized>(&self, task: Task, t: usize, rng: &mut R) -> Result<ScoreRecord> {
        let (source, s) = self.sample_mixture(t, rng)?;
        Ok(match task {
            Task::Ter => ScoreRecord::scored(t, s, source),
            Task::MiscoverageCls => ScoreRecord {
                source: Some(source),
                ..ScoreRecord::probability(t, s)
            },
            Task::MiscoverageReg => ScoreRecord {
                source: Some(source),
                ..ScoreRecord::regression(t, 0.0, s)
            },
        })
    }
}

/// Per-threshold component probabilities that make the true risk a
/// linear function of `pi_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    inlier: Vec<f64>,
    outlier: Vec<f64>,
}

impl RiskTable {
    pub fn new(sampler: &MixtureSampler, task: Task, grid: &ThresholdGrid) -> Result<Self> {
        let mut inlier = Vec::with_capacity(grid.len());
        let mut outlier = Vec::with_capacity(grid.len());
        for &psi in grid.values() {
            let (i, o) = match task {
                Task::Ter => (sampler.inlier.prob_at_least(psi)?, sampler.outlier.prob_below(psi)?),
                Task::MiscoverageCls => (sampler.inlier.prob_below(psi)?, sampler.outlier.prob_below(psi)?),
                Task::MiscoverageReg => (sampler.inlier.prob_above(psi)?, sampler.outlier.prob_above(psi)?),
            };
            inlier.push(i);
            outlier.push(o);
        }
        Ok(Self { inlier, outlier })
    }

    /// True risk per threshold at mixture weight `pi`.
    pub fn risk(&self, pi: f64) -> Vec<f64> {
        self.inlier
            .iter()
            .zip(&self.outlier)
            .map(|(i, o)| ((1.0 - pi) * i + pi * o).clamp(0.0, 1.0))
            .collect()
    }
}

/// How a synthetic stream reports ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroundTruth {
    /// Exact risk from the schedule.
    #[default]
    Exact,
    /// A fresh batch of `size` draws per step, for the oracle estimator.
    Oracle { size: usize },
    None,
}

/// Seeded, unbounded stream of mixture-sampled batches.
#[derive(Debug, Clone)]
pub struct SyntheticStream {
    sampler: MixtureSampler,
    task: Task,
    grid: ThresholdGrid,
    batch: usize,
    truth: GroundTruth,
    table: RiskTable,
    rng: ChaCha8Rng,
    oracle_rng: ChaCha8Rng,
    t: usize,
}

impl SyntheticStream {
    pub fn new(
        sampler: MixtureSampler,
        task: Task,
        grid: ThresholdGrid,
        batch: usize,
        truth: GroundTruth,
        seed: u64,
    ) -> Result<Self> {
        if batch == 0 {
            return Err(Error::Domain {
                name: "batch size",
                range: "[1, inf)",
                value: 0.0,
            });
        }
        if truth == (GroundTruth::Oracle { size: 0 }) {
            return Err(Error::Empty("oracle batch"));
        }
        let table = RiskTable::new(&sampler, task, &grid)?;
        Ok(Self {
            sampler,
            task,
            grid,
            batch,
            truth,
            table,
            rng: ChaCha8Rng::seed_from_u64(seed),
            // The oracle draws never perturb the monitored stream.
            oracle_rng: ChaCha8Rng::seed_from_u64(seed ^ 0xa076_1d64_78bd_642f),
            t: 0,
        })
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Exact true risk per threshold at step `t`.
    pub fn true_risk(&self, t: usize) -> Vec<f64> {
        self.table.risk(self.sampler.schedule.pi_out(t))
    }

    /// Raw records of the next step.
    pub fn next_records(&mut self) -> Result<Vec<ScoreRecord>> {
        self.t += 1;
        let t = self.t;
        (0..self.batch)
            .map(|_| self.sampler.sample_record(self.task, t, &mut self.rng))
            .collect()
    }

    fn next_step(&mut self) -> Result<StepInput> {
        let records = self.next_records()?;
        let t = self.t;
        let record = self.task.loss_record(t, &records, &self.grid)?;
        let truth = match self.truth {
            GroundTruth::Exact => Truth::Risk(self.true_risk(t)),
            GroundTruth::None => Truth::Unknown,
            GroundTruth::Oracle { size } => {
                let draws = (0..size)
                    .map(|_| self.sampler.sample_record(self.task, t, &mut self.oracle_rng))
                    .collect::<Result<Vec<_>>>()?;
                Truth::Oracle(self.task.loss_record(t, &draws, &self.grid)?.values)
            }
        };
        Ok(StepInput { record, truth })
    }
}

impl Iterator for SyntheticStream {
    type Item = Result<StepInput>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_step())
    }
}

/// Independent Bernoulli losses whose mean per `(t, threshold index)` comes
/// from `mean`. The exact means are reported as ground truth.
pub struct BernoulliStream<F> {
    mean: F,
    thresholds: usize,
    batch: usize,
    rng: ChaCha8Rng,
    t: usize,
}

impl<F: FnMut(usize, usize) -> f64> BernoulliStream<F> {
    pub fn new(mean: F, thresholds: usize, batch: usize, seed: u64) -> Self {
        Self {
            mean,
            thresholds,
            batch: batch.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
            t: 0,
        }
    }

    fn next_step(&mut self) -> Result<StepInput> {
        self.t += 1;
        let t = self.t;
        let mut risk = Vec::with_capacity(self.thresholds);
        let mut values = Vec::with_capacity(self.thresholds);
        for k in 0..self.thresholds {
            let p = (self.mean)(t, k);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain {
                    name: "bernoulli mean",
                    range: "[0, 1]",
                    value: p,
                });
            }
            risk.push(p);
            values.push(
                (0..self.batch)
                    .map(|_| if self.rng.random::<f64>() < p { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
        Ok(StepInput {
            record: LossRecord { t, values },
            truth: Truth::Risk(risk),
        })
    }
}

impl<F: FnMut(usize, usize) -> f64> Iterator for BernoulliStream<F> {
    type Item = Result<StepInput>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_step())
    }
}
