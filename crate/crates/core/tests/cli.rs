use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use souschef::api::{EventLog, RecipeStore, Service};
use souschef::recipe::bundled_recipe;
use souschef::{Config, Runtime};

fn souschef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_souschef"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("SOUSCHEF_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_prints_the_report() {
    let out = souschef(&["run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["classifier_transitions"], 9);
    assert_eq!(report["timer_transitions"], 3);
    assert_eq!(report["complete"], true);
}

#[test]
fn recipe_validate_lists_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, bundled_recipe("pasta").unwrap().to_json()).unwrap();
    let out = souschef(&["recipe", "validate", good.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "ok");

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&good).unwrap()).unwrap();
    doc["states"][1]["next"] = "nowhere".into();
    doc["states"][2]["advance"]["label"] = "souffle".into();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();
    let out = souschef(&["recipe", "validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("unknown target"), "{text}");
    assert!(text.contains("undeclared label"), "{text}");
}

#[test]
fn dataset_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    let root_s = root.to_str().unwrap();
    let out = souschef(&["corpus", "--recipe", "pasta", "--root", root_s]);
    assert!(out.status.success());
    let summaries: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let total: u64 = summaries
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["records"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 2045);

    let balanced = dir.path().join("balanced.csv");
    let out = souschef(&[
        "dataset", "balance", "--root", root_s, "--out", balanced.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/pasta_balanced.csv");
    assert_eq!(fs::read(&balanced).unwrap(), fs::read(golden).unwrap());

    let full = dir.path().join("full.csv");
    let out = souschef(&["dataset", "export", "--root", root_s, "--out", full.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&full).unwrap().lines().count(), 2045);

    let out = souschef(&["dataset", "stats", "--root", root_s]);
    let stats: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["total"], 2045);
}

#[test]
fn config_reads_file_then_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "[service]\nport = 9001\n[control]\nkp = 0.05\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_souschef"))
        .args(["--config", path.to_str().unwrap(), "config"])
        .env("SOUSCHEF__CONTROL__KP", "0.08")
        .output()
        .unwrap();
    assert!(out.status.success());
    let c = Config::from_toml(&stdout(&out)).unwrap();
    assert_eq!(c.service.port, 9001);
    assert_eq!(c.control.gains.kp, 0.08);
}

#[test]
fn session_commands_reach_a_running_server() {
    let data = tempfile::tempdir().unwrap();
    let mut config = Config::default();
    config.sim.speedup = 20.0;
    config.labeling.root = data.path().to_path_buf();
    let rt = Runtime::new(config, RecipeStore::with_bundled(), EventLog::in_memory().shared()).unwrap();
    let service = Service::start(rt, "127.0.0.1:0".parse().unwrap()).unwrap();
    let server = format!("http://{}", service.addr);

    let out = souschef(&["session", "start", "--server", &server]);
    assert_eq!(out.status.code(), Some(1), "no recipe loaded yet");
    let load = r#"{"kind":"load_recipe","id":"pasta"}"#;
    assert!(souschef(&["command", load, "--server", &server]).status.success());
    assert!(souschef(&["session", "start", "--id", "cli-1", "--server", &server]).status.success());
    assert!(souschef(&["label", "set", "pan_on", "--server", &server]).status.success());
    assert!(!souschef(&["label", "set", "nope", "--server", &server]).status.success());
    assert!(souschef(&["session", "stop", "--server", &server]).status.success());
    service.stop();
}
