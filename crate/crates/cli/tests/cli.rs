use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn worked() -> String {
    fixtures().join("worked_example.json").display().to_string()
}

fn evtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evtrack")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = evtrack(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

/// Runs a failing command and returns its exit code and stderr body.
fn failure(args: &[&str]) -> (i32, Value) {
    let out = evtrack(args);
    assert!(out.stdout.is_empty(), "nothing on stdout on failure");
    let body = serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr not JSON: {}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().expect("exit code"), body)
}

fn close(a: &Value, b: f64) -> bool {
    (a.as_f64().unwrap() - b).abs() < 1e-9
}

#[test]
fn worked_example_paths() {
    let doc = ok_json(&["paths", "--scenario", &worked(), "--n-subs", "1"]);
    assert_eq!(doc["n_subs"], 1);
    assert_eq!(doc["approximate"], false);
    assert!(close(&doc["conflict_k"], 0.15));
    let expected = [
        (vec!["r1"], 3.0 / 17.0, 10.0 / 17.0),
        (vec!["r1", "r2"], 3.0 / 17.0, 10.0 / 17.0),
        (vec!["r2"], 2.0 / 17.0, 8.0 / 17.0),
        (vec![], 0.0, 4.0 / 17.0),
    ];
    let paths = doc["paths"].as_array().unwrap();
    assert_eq!(paths.len(), expected.len());
    for (p, (chain, bel, pl)) in paths.iter().zip(expected) {
        let got: Vec<&str> = p["chain"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        assert_eq!(got, chain);
        assert!(close(&p["support"], bel), "{p}");
        assert!(close(&p["plausibility"], pl), "{p}");
    }

    let top = ok_json(&["paths", "--scenario", &worked(), "--n-subs", "1", "--top", "2"]);
    assert_eq!(top["paths"].as_array().unwrap().len(), 2);
}

#[test]
fn worked_example_counts() {
    let doc = ok_json(&["counts", "--scenario", &worked()]);
    assert_eq!(doc["min_submarines"], 1);
    let one = &doc["intervals"]["1"];
    assert!(close(&one[0], 13.0 / 17.0) && close(&one[1], 1.0), "{doc}");
    let zero = &doc["intervals"]["0"];
    assert!(close(&zero[0], 0.0) && close(&zero[1], 4.0 / 17.0), "{doc}");
}

#[test]
fn simulate_is_deterministic_and_matches_golden() {
    let config = fixtures().join("archipelago_sim.json").display().to_string();
    let a = evtrack(&["simulate", "--config", &config, "--seed", "7"]);
    let b = evtrack(&["simulate", "--config", &config, "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let golden = std::fs::read(fixtures().join("golden/scenario.json")).unwrap();
    assert_eq!(a.stdout, golden);

    let other = evtrack(&["simulate", "--config", &config, "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn out_writes_file_and_prints_receipt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.json");
    let receipt = ok_json(&["graph", "--scenario", &worked(), "--out", path.to_str().unwrap()]);
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(receipt["bytes"], written.len());
    let graph: Value = serde_json::from_str(&written).unwrap();
    assert_eq!(graph["nodes"].as_array().unwrap().len(), 2);
    assert!(close(&graph["edges"][0]["q"], 0.5));
}

#[test]
fn region_and_routes() {
    let empty = ok_json(&["region", "--scenario", &worked(), "--rect", "15000,0,20000,10000"]);
    assert!(close(&empty["support"], 0.0) && close(&empty["plausibility"], 1.0));

    let around_r1 = ok_json(&["region", "--scenario", &worked(), "--rect", "1000,4000,3000,6000"]);
    assert!(close(&around_r1["support"], 0.6));

    let route = ok_json(&["shortest", "--scenario", &worked(), "--from", "0,0", "--to", "3000,4000"]);
    assert!(close(&route["length_m"], 5000.0));

    let start = ok_json(&["incident", "--scenario", &worked(), "--threshold", "0.5"]);
    assert_eq!(start["start"], 0);
}

#[test]
fn evidence_map_shape() {
    let doc = ok_json(&["evmap", "--scenario", &worked(), "--t", "1000000", "--cell", "1000"]);
    let text = doc.to_string();
    assert!(text.contains("r1") && text.contains("r2"), "layers for both reports");
}

#[test]
fn input_errors_exit_2() {
    let (code, body) = failure(&["paths", "--scenario", "/no/such/file.json", "--n-subs", "1"]);
    assert_eq!((code, body["field"].as_str()), (2, Some("scenario")));

    let (code, body) = failure(&["region", "--scenario", &worked(), "--rect", "1,2"]);
    assert_eq!((code, body["field"].as_str()), (2, Some("rect")));

    let (code, body) = failure(&["paths", "--scenario", &worked(), "--n-subs", "many"]);
    assert_eq!((code, body["field"].as_str()), (2, Some("n_subs")));

    let (code, body) = failure(&["graph", "--scenario", &worked(), "--threshold", "1.5"]);
    assert_eq!((code, body["field"].as_str()), (2, Some("threshold")));

    let (code, _) = failure(&["paths", "--scenario", &worked()]);
    assert_eq!(code, 2);

    let (code, body) = failure(&["simulate", "--config", "/no/such/sim.json"]);
    assert_eq!((code, body["field"].as_str()), (2, Some("config")));
}

#[test]
fn precondition_errors_exit_3() {
    let (code, body) = failure(&["evmap", "--scenario", &worked(), "--t", "-5"]);
    assert_eq!(code, 3);
    assert_eq!(body["field"], "t");

    let (code, body) = failure(&["shortest", "--scenario", &worked(), "--from", "0,0", "--to", "99999,0"]);
    assert_eq!((code, body["field"].as_str()), (3, Some("to")));
}

#[test]
fn help_succeeds() {
    let out = evtrack(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}
