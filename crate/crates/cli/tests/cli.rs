use std::fs;
use std::process::Command;

use marked_sets_cli::{config_hash, run, ExperimentConfig, ExperimentName, RunManifest};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_marked-sets"))
}

#[test]
fn unknown_config_keys_are_rejected() {
    let err = ExperimentConfig::from_json(r#"{"experiment": "theory-t0", "sead": 3}"#).unwrap_err();
    assert!(err.to_string().contains("sead"), "{err}");
    let err = ExperimentConfig::from_json(r#"{"experiment": "periodic-example", "periodic": {"nodez": 10}}"#);
    assert!(err.is_err());
}

#[test]
fn binary_rejects_bad_config_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"experiment": "no-such-experiment"}"#).unwrap();
    let status = binary().arg("--config").arg(&path).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn manifest_and_artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let status = binary()
        .args(["--experiment", "definiteness", "--seed", "7", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: RunManifest =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.experiment, ExperimentName::Definiteness);
    assert_eq!(manifest.seed, 7);
    assert_eq!(manifest.config_hash.len(), 64);
    assert!(manifest.passed);
    for name in &manifest.artifacts {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
}

#[test]
fn config_hash_tracks_parameters() {
    let a = ExperimentConfig::new(ExperimentName::GrfEmpirical);
    let mut b = a.clone();
    assert_eq!(config_hash(&a), config_hash(&b));
    b.seed += 1;
    assert_ne!(config_hash(&a), config_hash(&b));
}

#[test]
fn reruns_write_identical_artifacts() {
    let mut cfg = ExperimentConfig::new(ExperimentName::SegmentSingleton);
    cfg.replicates = Some(20);
    let (_, first) = run(&cfg).unwrap();
    cfg.workers = Some(2);
    let (_, second) = run(&cfg).unwrap();
    assert_eq!(first.artifacts, second.artifacts);
}
