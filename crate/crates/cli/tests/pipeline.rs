use std::path::Path;
use std::process::Command;

use srr_cli::config::{DataConfig, RunConfig};
use srr_cli::pipeline::{Run, Stage};
use srr_cli::CliError;
use srr_core::eval::EvaluationReport;
use srr_core::synthetic::SyntheticConfig;

fn quick(out: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        out: Some(out.to_path_buf()),
        data: DataConfig {
            synthetic: Some(SyntheticConfig {
                n_tickers: 12,
                n_days: 400,
                ..Default::default()
            }),
            ..Default::default()
        },
        ..Default::default()
    };
    cfg.labels.horizon = 20;
    cfg.graph.stride = 2;
    cfg.model.epochs = 4;
    cfg.model.forest.n_trees = 10;
    cfg.model.logistic.epochs = 300;
    cfg
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn full_pipeline_emits_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(dir.path());
    Run::new(&cfg).unwrap().run_all().unwrap();
    for rel in [
        "prices.csv",
        "universe.csv",
        "provenance.json",
        "features.csv",
        "graph_labels.csv",
        "standardization.json",
        "split.json",
        "graphs.jsonl",
        "models/temporal_gcn.srrm",
        "models/random_forest.log.json",
        "report.json",
        "timelines/logistic.csv",
        "report/summary.md",
        "report/roc.svg",
        "report/pr.svg",
        "report/timeline.svg",
        "report/lead_times.svg",
        "report/feature_importance.svg",
    ] {
        assert!(dir.path().join(rel).is_file(), "{rel} missing");
    }
    for s in Stage::ALL {
        let m: serde_json::Value = serde_json::from_slice(&read(dir.path(), &format!("stage_{}.json", s.name()))).unwrap();
        assert_eq!(m["config_hash"], cfg.hash());
        assert_eq!(m["seed"], 42);
    }
    let report = EvaluationReport::from_json(std::str::from_utf8(&read(dir.path(), "report.json")).unwrap()).unwrap();
    assert_eq!(report.models.len(), 4);
    let summary = String::from_utf8(read(dir.path(), "report/summary.md")).unwrap();
    assert!(summary.contains("| Crisis | Model | AUROC | Precision | Recall | Accuracy |"));
    assert!(summary.contains(&cfg.hash()));
    let importance = String::from_utf8(read(dir.path(), "report/feature_importance.svg")).unwrap();
    for name in ["ret_1d", "vol_20", "vol_60", "dd_20", "dd_60", "mom_10", "mom_30"] {
        assert!(importance.contains(&format!(">{name}<")), "{name} not in importance chart");
    }
}

#[test]
fn rerunning_a_stage_reproduces_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(dir.path());
    let mut run = Run::new(&cfg).unwrap();
    run.run_all().unwrap();
    let before: Vec<Vec<u8>> = ["models/snapshot_gcn.srrm", "stage_train.json", "report/timeline.svg"]
        .iter()
        .map(|r| read(dir.path(), r))
        .collect();
    run.run_stage(Stage::Train).unwrap();
    run.run_stage(Stage::Evaluate).unwrap();
    run.run_stage(Stage::Report).unwrap();
    let after: Vec<Vec<u8>> = ["models/snapshot_gcn.srrm", "stage_train.json", "report/timeline.svg"]
        .iter()
        .map(|r| read(dir.path(), r))
        .collect();
    assert_eq!(before, after);
}

#[test]
fn evaluate_before_train_names_the_model_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(dir.path());
    let mut run = Run::new(&cfg).unwrap();
    for s in [Stage::Ingest, Stage::Features, Stage::Graphs] {
        run.run_stage(s).unwrap();
    }
    match run.run_stage(Stage::Evaluate) {
        Err(CliError::Data(m)) => {
            assert!(m.contains("models/snapshot_gcn.srrm"), "{m}");
            assert!(m.contains("srr train"), "{m}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn stale_and_tampered_upstream_artifacts_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(dir.path());
    let mut run = Run::new(&cfg).unwrap();
    run.run_stage(Stage::Ingest).unwrap();
    run.run_stage(Stage::Features).unwrap();

    let mut changed = cfg.clone();
    changed.graph.tau = 0.6;
    match Run::new(&changed).unwrap().run_stage(Stage::Graphs) {
        Err(CliError::Data(m)) => assert!(m.contains("rerun `srr ingest`") || m.contains("rerun `srr features`"), "{m}"),
        other => panic!("{other:?}"),
    }

    std::fs::write(dir.path().join("split.json"), "{}").unwrap();
    match run.run_stage(Stage::Graphs) {
        Err(CliError::Data(m)) => assert!(m.contains("split.json") && m.contains("srr features"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_class_test_period_omits_curves_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick(dir.path());
    // one early crash; the test period stays calm
    cfg.data.synthetic.as_mut().unwrap().crash_days = Some(vec![150]);
    Run::new(&cfg).unwrap().run_all().unwrap();
    assert!(!dir.path().join("report/roc.svg").exists());
    assert!(!dir.path().join("report/pr.svg").exists());
    let summary = String::from_utf8(read(dir.path(), "report/summary.md")).unwrap();
    assert!(summary.contains("single class"), "{summary}");
    assert!(summary.contains("| -- |"), "{summary}");
}

#[test]
fn shipped_configs_parse_and_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["default.toml", "synthetic.toml"] {
        let cfg = RunConfig::load(&root.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(RunConfig::from_toml(&cfg.canonical_toml()).unwrap().canonical_toml(), cfg.canonical_toml());
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_srr");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "[data.synthetic]\nn_tickers = 8\nn_days = 300\n[labels]\nhorizon = 20\n").unwrap();
    let out = dir.path().join("run");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();

    let unknown = status(&["ingest", "--config", cfg_path.to_str().unwrap(), "--preset", "asia97"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("dotcom, gfc, covid"));

    let early = status(&["train", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(early.status.code(), Some(2));

    let ok = status(&["ingest", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    std::fs::write(&cfg_path, "bogus = true\n").unwrap();
    assert_eq!(status(&["ingest", "--config", cfg_path.to_str().unwrap()]).status.code(), Some(1));
}
