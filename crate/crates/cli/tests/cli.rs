use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
seed = 11

[library]
size = 4
seen = 3

[tournament]
episodes = 1

[tournament.engine]
step_limit = 300

[sen.train]
epochs = 5
hidden = [8]

[experiment]
agents = [{ kind = "sap", variant = "full" }, { kind = "vanilla" }]
episodes = 2
pool_episodes = 1
recognition_episodes = 2
bootstrap_iters = 50
"#;

fn sap(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_sap"))
        .arg("--config")
        .arg(dir.join("run.toml"))
        .arg("--out-dir")
        .arg(dir.join("out"))
        .arg("--workers")
        .arg("1")
        .args(args)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "sap {args:?} failed: {}{}",
        stdout,
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let out = dir.path().join("out");

    sap(dir.path(), &["gen-strategies"]);
    assert_eq!(lines(&out.join("library.jsonl")), 4);
    assert_eq!(lines(&out.join("seen.jsonl")), 3);
    assert_eq!(lines(&out.join("unseen.jsonl")), 1);

    sap(dir.path(), &["tournament"]);
    assert_eq!(lines(&out.join("dataset.jsonl")), 9);
    let again = sap(dir.path(), &["tournament"]);
    assert!(again.contains("9 records (0 new)"), "{again}");

    sap(dir.path(), &["train-sen"]);
    assert!(out.join("sen.json").exists());
    sap(dir.path(), &["eval-sen"]);
    assert!(out.join("sen_metrics.json").exists());

    sap(dir.path(), &["match", "--p1", "sap", "--p2", "scripted:passive", "--episodes", "1"]);
    sap(dir.path(), &["experiment"]);
    for f in ["experiment.json", "pool_scores.json", "searched.json", "ablation.json", "recognition.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    sap(dir.path(), &["report"]);
    let tables: Vec<_> = std::fs::read_dir(out.join("tables")).unwrap().collect();
    assert_eq!(tables.len(), 8);
    assert!(lines(&out.join("tables/win_rate_matrix.csv")) == 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    for c in ["gen-strategies", "tournament", "train-sen", "eval-sen", "match", "experiment", "report"] {
        assert!(manifest["commands"][c].is_object(), "{c} missing from manifest");
    }
}

#[test]
fn seed_flag_overrides_config_and_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let manifest = |d: &Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(d.join("out/manifest.json")).unwrap()).unwrap()
    };
    sap(dir.path(), &["gen-strategies"]);
    let a = manifest(dir.path());
    sap(dir.path(), &["--seed", "12", "gen-strategies"]);
    let b = manifest(dir.path());
    assert_eq!(b["commands"]["gen-strategies"]["seed"], 12);
    assert_ne!(a["config_sha256"], b["config_sha256"]);
}

#[test]
fn bad_agent_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_sap"))
        .args(["--out-dir"])
        .arg(dir.path().join("out"))
        .args(["match", "--p1", "nobody", "--p2", "vanilla"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown agent"));

    std::fs::write(dir.path().join("typo.toml"), "[library]\nsize = 4\nseeen = 3\n").unwrap();
    let typo = Command::new(env!("CARGO_BIN_EXE_sap"))
        .arg("--config")
        .arg(dir.path().join("typo.toml"))
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .arg("gen-strategies")
        .output()
        .unwrap();
    assert!(!typo.status.success());
}
