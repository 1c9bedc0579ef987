use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::loss::{ScoreRecord, Source, Task};
use super::{StepInput, Truth};
use crate::error::{Error, Result};
use crate::types::ThresholdGrid;

/// Reads a score file for `task`. Line numbers in errors count the header
/// as line 1.
pub fn ingest_scores(path: impl AsRef<Path>, task: Task) -> Result<Vec<ScoreRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(file, task)
}

pub fn read_scores<R: Read>(reader: R, task: Task) -> Result<Vec<ScoreRecord>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let column: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let missing: Vec<&str> = std::iter::once("t")
        .chain(task.columns().iter().copied())
        .filter(|c| !column.contains_key(c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: format!("missing column(s) {} for task {task}", missing.join(", ")),
        });
    }

    let mut out = Vec::new();
    let mut prev_t = 0usize;
    for row in csv.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |name: &str| row.get(column[name]).unwrap_or("");
        let fail = |message: String| Error::Parse { line, message };

        let t: usize = field("t")
            .parse()
            .map_err(|_| fail(format!("t must be an integer >= 1, got `{}`", field("t"))))?;
        if t == 0 {
            return Err(fail("t must be >= 1".into()));
        }
        if t < prev_t {
            return Err(fail(format!("time index {t} follows {prev_t}")));
        }
        if t > prev_t + 1 {
            return Err(fail(format!("time index jumps from {prev_t} to {t}")));
        }
        prev_t = t;

        let real = |name: &str| -> Result<f64> {
            let raw = field(name);
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fail(format!("{name} must be a finite number, got `{raw}`"))),
            }
        };
        let unit = |name: &str| -> Result<f64> {
            let v = real(name)?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(fail(format!("{name} {v} is outside [0, 1]")))
            }
        };

        let record = match task {
            Task::Ter => {
                let source: Source = field("source").parse().map_err(fail)?;
                ScoreRecord::scored(t, unit("score")?, source)
            }
            Task::MiscoverageCls => ScoreRecord::probability(t, unit("score")?),
            Task::MiscoverageReg => ScoreRecord::regression(t, real("yhat")?, real("y")?),
        };
        out.push(record);
    }
    if out.is_empty() {
        return Err(Error::Empty("score file"));
    }
    Ok(out)
}

/// Splits time-ordered records into per-step batches. Every step must carry
/// the same number of records.
pub fn group_batches(records: &[ScoreRecord]) -> Result<Vec<Vec<ScoreRecord>>> {
    let mut batches: Vec<Vec<ScoreRecord>> = Vec::new();
    for r in records {
        match batches.last_mut() {
            Some(b) if b[0].t == r.t => b.push(*r),
            Some(b) if b[0].t > r.t => {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("records out of order: t={} after t={}", r.t, b[0].t),
                })
            }
            _ => batches.push(vec![*r]),
        }
    }
    if let Some(first) = batches.first() {
        let expected = first.len();
        if let Some(bad) = batches.iter().find(|b| b.len() != expected) {
            return Err(Error::BatchMismatch {
                t: bad[0].t,
                expected,
                actual: bad.len(),
            });
        }
    }
    Ok(batches)
}

/// Loss stream over ingested records; ground truth is unknown.
#[derive(Debug, Clone)]
pub struct FileStream {
    batches: std::vec::IntoIter<Vec<ScoreRecord>>,
    task: Task,
    grid: ThresholdGrid,
    batch: usize,
}

impl FileStream {
    pub fn new(records: &[ScoreRecord], task: Task, grid: ThresholdGrid) -> Result<Self> {
        let batches = group_batches(records)?;
        let batch = batches.first().map_or(0, Vec::len);
        Ok(Self {
            batches: batches.into_iter(),
            task,
            grid,
            batch,
        })
    }

    pub fn open(path: impl AsRef<Path>, task: Task, grid: ThresholdGrid) -> Result<Self> {
        Self::new(&ingest_scores(path, task)?, task, grid)
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Steps not yet consumed.
    pub fn remaining(&self) -> usize {
        self.batches.len()
    }
}

impl Iterator for FileStream {
    type Item = Result<StepInput>;

    fn next(&mut self) -> Option<Self::Item> {
        let batch = self.batches.next()?;
        Some(
            self.task
                .loss_record(batch[0].t, &batch, &self.grid)
                .map(|record| StepInput {
                    record,
                    truth: Truth::Unknown,
                }),
        )
    }
}

/// Writes records in the layout [`read_scores`] accepts.
pub fn write_scores<W: std::io::Write>(writer: W, task: Task, records: &[ScoreRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t"];
    header.extend_from_slice(task.columns());
    w.write_record(&header)?;
    for r in records {
        let t = r.t.to_string();
        let num = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.17e}"));
        match task {
            Task::Ter => w.write_record([
                t,
                num(r.score),
                r.source.map_or("", Source::as_str).to_string(),
            ])?,
            Task::MiscoverageCls => w.write_record([t, num(r.score)])?,
            Task::MiscoverageReg => w.write_record([t, num(r.yhat), num(r.y)])?,
        }
    }
    w.flush().map_err(|e| Error::io("<score writer>", e))?;
    Ok(())
}
