use std::fs;

use riskmon_core::experiment::{
    emit_trace, run_experiment, run_trial, validate_guarantees, write_bundle, Bundle, ExperimentConfig, GridConfig,
    WindowSize, SUMMARY_FILE,
};
use riskmon_core::TrackerKind;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        windows: vec![WindowSize(None), WindowSize(Some(25))],
        batches: vec![1, 4],
        trials: 6,
        horizon: Some(250),
        grid: GridConfig { lo: 0.0, hi: 1.0, points: 9 },
        seed: 3,
        ..Default::default()
    }
}

#[test]
fn bundles_are_reproducible_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&small()).unwrap();
    let a = write_bundle(&res, dir.path().join("a")).unwrap();
    let b = write_bundle(&run_experiment(&small()).unwrap(), dir.path().join("b")).unwrap();
    assert_eq!(fs::read(a.join(SUMMARY_FILE)).unwrap(), fs::read(b.join(SUMMARY_FILE)).unwrap());

    let bundle = Bundle::load(&a).unwrap();
    assert_eq!(bundle, Bundle::from_results(&res));
    let report = validate_guarantees(&bundle, &res.spec);
    assert!(report.passed(), "{report}");
    assert!(report.lines.iter().any(|l| l.tracker == TrackerKind::RunningRisk.name() && !l.guaranteed));
}

#[test]
fn overwriting_a_bundle_leaves_no_scratch() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&small()).unwrap();
    write_bundle(&res, dir.path().join("out")).unwrap();
    write_bundle(&res, dir.path().join("out")).unwrap();
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec!["out".to_string()]);
}

#[test]
fn hash_tracks_content_not_formatting() {
    let cfg = small();
    let toml = cfg.to_toml_string().unwrap();
    let back = ExperimentConfig::from_toml_str(&toml).unwrap();
    assert_eq!(cfg.hash(), back.hash());
    let reseeded = ExperimentConfig { seed: 4, ..small() };
    assert_ne!(cfg.hash(), reseeded.hash());
}

#[test]
fn trace_has_one_row_per_threshold_plus_set_size() {
    let cfg = ExperimentConfig {
        trackers: vec![TrackerKind::WealthMult],
        horizon: Some(3),
        grid: GridConfig { lo: 0.2, hi: 0.8, points: 2 },
        ..small()
    };
    let runs = run_trial(&cfg, WindowSize(None), 1, 0, true).unwrap();
    let mut buf = Vec::new();
    emit_trace(&mut buf, &runs, &cfg.grid.build().unwrap()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 2 + 3);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",9") || r.ends_with(",2")).count(), 3);
}

#[test]
fn trace_requires_kept_values() {
    let runs = run_trial(&small(), WindowSize(None), 1, 0, false).unwrap();
    assert!(emit_trace(Vec::new(), &runs, &small().grid.build().unwrap()).is_err());
}

#[test]
fn invalid_configs_list_every_problem() {
    let cfg = ExperimentConfig { epsilon: 2.0, trials: 0, batches: vec![], ..small() };
    let err = cfg.validate().unwrap_err().to_string();
    assert!(err.contains("epsilon") && err.contains("trials") && err.contains("batches"), "{err}");
}
