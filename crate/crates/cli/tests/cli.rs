use std::path::{Path, PathBuf};
use std::process::Command;

use fbns_cli::manifest::Manifest;
use fbns_cli::{run, CliError, Command as Sub, Overrides};

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.json")
}

fn out(dir: &Path) -> Overrides {
    Overrides {
        out: Some(dir.to_path_buf()),
        ..Overrides::default()
    }
}

fn fbns(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fbns")).args(args).output().unwrap()
}

#[test]
fn train_before_label_names_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    run(Sub::Ingest, &fixture_config(), &out(dir.path())).unwrap();
    match run(Sub::Train, &fixture_config(), &out(dir.path())) {
        Err(e @ CliError::MissingArtifact { producer: "label", .. }) => assert_eq!(e.exit_code(), 3),
        other => panic!("expected a missing-artifact error, got {other:?}"),
    }

    let o = fbns(&["train", "--config", fixture_config().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fbns label"));
}

#[test]
fn validation_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fixture_config()).unwrap()).unwrap();
    cfg["eta"] = 1.5.into();
    cfg["thresholds"] = serde_json::json!([0.1, -2.0]);
    cfg["model"]["lambda"] = 0.0.into();
    cfg["input"]["bars"] = std::fs::canonicalize(fixture_config().with_file_name("bars.csv"))
        .unwrap()
        .to_str()
        .unwrap()
        .into();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();

    match run(Sub::Ingest, &path, &out(&dir.path().join("run"))) {
        Err(CliError::Validation(v)) => {
            assert_eq!(v.len(), 3, "{v:?}");
            assert!(v.iter().any(|m| m.contains("eta")));
            assert!(v.iter().any(|m| m.contains("thresholds")));
            assert!(v.iter().any(|m| m.contains("lambda")));
        }
        other => panic!("expected validation failure, got {other:?}"),
    }
    let o = fbns(&["ingest", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_config_flag_is_a_validation_error() {
    assert_eq!(fbns(&["ingest"]).status.code(), Some(1));
}

#[test]
fn locked_run_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".lock"), "").unwrap();
    match run(Sub::Ingest, &fixture_config(), &out(dir.path())) {
        Err(e @ CliError::Runtime(_)) => assert_eq!(e.exit_code(), 2),
        other => panic!("expected lock refusal, got {other:?}"),
    }
}

#[test]
fn seed_change_touches_only_seed_dependent_records() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, 1), (&b, 2)] {
        let o = Overrides {
            seed: Some(seed),
            ..out(dir.path())
        };
        run(Sub::Pipeline, &fixture_config(), &o).unwrap();
    }
    let load = |d: &Path| -> Manifest { serde_json::from_slice(&std::fs::read(d.join("manifest.json")).unwrap()).unwrap() };
    let (ma, mb) = (load(a.path()), load(b.path()));
    assert_eq!((ma.seed, mb.seed), (1, 2));
    assert_eq!(ma.tool_version, mb.tool_version);
    assert_eq!(ma.artifacts.keys().collect::<Vec<_>>(), mb.artifacts.keys().collect::<Vec<_>>());

    let mut changed = 0;
    for (name, ra) in &ma.artifacts {
        let rb = &mb.artifacts[name];
        assert_eq!(ra.command, rb.command);
        assert_eq!(ra.seed_dependent, rb.seed_dependent);
        if !ra.seed_dependent {
            assert_eq!(ra, rb, "{name} changed with the seed");
            continue;
        }
        for (key, value) in &ra.inputs {
            if rb.inputs[key] != *value {
                let seeded = key == "seed" || ma.artifacts.get(key).is_some_and(|r| r.seed_dependent);
                assert!(seeded, "{name}: input {key} changed but is not seed-derived");
            }
        }
        changed += (ra.sha256 != rb.sha256) as usize;
    }
    assert!(changed > 0, "no seed-dependent artifact changed");
}
