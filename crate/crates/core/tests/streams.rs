use std::io::Write;

use riskmon_core::streams::{ingest_scores, write_scores, FileStream, GroundTruth, MixtureSampler, ScorePool,
    SyntheticStream};
use riskmon_core::{
    run_monitor, BettingStrategy, Error, MonitorOptions, RiskSpec, ScoreRecord, ShiftSchedule, Source, Task,
    ThresholdGrid, TrackerKind, WindowConfig,
};

fn grid() -> ThresholdGrid {
    ThresholdGrid::linspace(0.0, 1.0, 11).unwrap()
}

#[test]
fn file_stream_drives_monitor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scores.csv");
    let records: Vec<ScoreRecord> = (1..=300)
        .map(|t| {
            let src = if t > 100 && t % 2 == 0 { Source::Out } else { Source::In };
            let s = if src == Source::Out { 0.05 } else { 0.02 };
            ScoreRecord::scored(t, s, src)
        })
        .collect();
    write_scores(std::fs::File::create(&path).unwrap(), Task::Ter, &records).unwrap();

    let back = ingest_scores(&path, Task::Ter).unwrap();
    assert_eq!(back, records);
    let stream = FileStream::open(&path, Task::Ter, grid()).unwrap();
    assert_eq!(stream.batch_size(), 1);
    let spec = RiskSpec::new(0.1, 0.1).unwrap();
    let window = WindowConfig::new(None, 1).unwrap();
    let run = run_monitor(&grid(), &spec, &window, TrackerKind::WealthMult, BettingStrategy::Agra, stream, 300,
        MonitorOptions::default()).unwrap();
    // Unlabelled streams carry no violation times.
    assert!(run.records.iter().all(|r| r.tau_star.is_none() && !r.false_alarm));
    // Outliers score 0.05 < 0.5, so every other step after 100 is a miss there.
    assert!(run.records[5].tau.is_some());
}

#[test]
fn truncated_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "t,score\n1,0.2\n2,0.4").unwrap();
    let stream = FileStream::open(&path, Task::MiscoverageCls, grid()).unwrap();
    let spec = RiskSpec::new(0.1, 0.1).unwrap();
    let window = WindowConfig::new(None, 1).unwrap();
    let err = run_monitor(&grid(), &spec, &window, TrackerKind::WealthMult, BettingStrategy::Agra, stream, 5,
        MonitorOptions::default()).unwrap_err();
    assert!(matches!(err, Error::StreamTruncated { available: 2, horizon: 5 }), "{err}");
}

#[test]
fn bad_rows_name_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t,score,source\n1,0.1,in\n2,0.3,sideways\n").unwrap();
    let err = ingest_scores(&path, Task::Ter).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
}

#[test]
fn synthetic_violation_times_follow_schedule() {
    let sampler = MixtureSampler::new(
        ShiftSchedule::stepwise(200),
        ScorePool::Beta { a: 1.0, b: 12.0 },
        ScorePool::Beta { a: 1.0, b: 1.0 },
    )
    .unwrap();
    let stream = SyntheticStream::new(sampler, Task::Ter, grid(), 1, GroundTruth::Exact, 3).unwrap();
    let risk_early = stream.true_risk(10);
    let risk_late = stream.true_risk(1400);
    // Before the first outlier step only inlier false positives count.
    assert!(risk_early.windows(2).all(|w| w[1] <= w[0]));
    // From psi = 0.5 on, missed outliers outweigh flagged inliers.
    assert!(risk_late[5..].iter().zip(&risk_early[5..]).all(|(l, e)| l > e));
    assert!(risk_late[0] < risk_early[0]);
}
