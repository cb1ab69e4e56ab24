use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::{to_bytes, Body, Bytes};
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use evtrack_service::{router, AppState, ServiceConfig, TOKEN_HEADER};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn app() -> Router {
    let config = ServiceConfig {
        scenario_dir: Some(fixtures()),
        ..ServiceConfig::default()
    };
    router(Arc::new(AppState::new(config)))
}

struct Reply {
    status: StatusCode,
    token: Option<String>,
    body: Bytes,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

async fn send(app: &Router, method: Method, uri: &str, content_type: &str, body: impl Into<Body>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, content_type)
        .body(body.into())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let token = resp.headers().get(TOKEN_HEADER).map(|v| v.to_str().unwrap().to_string());
    let body = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    Reply { status, token, body }
}

async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, "application/json", Body::empty()).await
}

async fn post_json(app: &Router, uri: &str, body: &Value) -> Reply {
    send(app, Method::POST, uri, "application/json", body.to_string()).await
}

fn worked_example() -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixtures().join("worked_example.json")).unwrap()).unwrap()
}

async fn upload(app: &Router, scenario: &Value) -> String {
    let r = post_json(app, "/scenarios", scenario).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.body));
    r.json()["token"].as_str().unwrap().to_string()
}

fn chain_interval(paths: &Value, chain: &[&str]) -> (f64, f64) {
    let p = paths["paths"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["chain"] == json!(chain))
        .unwrap_or_else(|| panic!("no chain {chain:?}"));
    (p["support"].as_f64().unwrap(), p["plausibility"].as_f64().unwrap())
}

#[tokio::test]
async fn worked_example_paths_over_http() {
    let app = app();
    upload(&app, &worked_example()).await;
    let r = get(&app, "/scenarios/worked-example/analysis/paths?n_subs=1").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    let (s, p) = chain_interval(&v, &["r1", "r2"]);
    assert!((s - 0.15 / 0.85).abs() < 1e-9 && (p - 0.5 / 0.85).abs() < 1e-9);
    let (s, p) = chain_interval(&v, &[]);
    assert!(s == 0.0 && (p - 0.2 / 0.85).abs() < 1e-9);
    assert!((v["conflict_k"].as_f64().unwrap() - 0.15).abs() < 1e-12);
    assert_eq!(v["approximate"], json!(false));
}

#[tokio::test]
async fn empty_scenario_has_no_paths() {
    let app = app();
    let mut s = worked_example();
    s["id"] = json!("empty");
    s["reports"] = json!([]);
    upload(&app, &s).await;
    let v = get(&app, "/scenarios/empty/analysis/paths").await.json();
    assert_eq!(v["paths"], json!([]));
    assert_eq!(v["conflict_k"], json!(0.0));
}

#[tokio::test]
async fn reads_are_idempotent_per_token() {
    let app = app();
    let token = upload(&app, &worked_example()).await;
    for uri in [
        "/scenarios/worked-example/analysis/paths?n_subs=1&top_n=3",
        "/scenarios/worked-example/evidence-map?t=500000&cell=500",
        "/scenarios/worked-example",
    ] {
        let a = get(&app, uri).await;
        let b = get(&app, uri).await;
        assert_eq!(a.status, StatusCode::OK, "{uri}");
        assert_eq!(a.body, b.body, "{uri}");
        assert_eq!(a.token.as_deref(), Some(token.as_str()));
    }
}

#[tokio::test]
async fn flags_bump_the_token_and_change_results() {
    let app = app();
    let before_token = upload(&app, &worked_example()).await;
    let before = get(&app, "/scenarios/worked-example/analysis/paths?n_subs=1").await;

    let r = post_json(&app, "/scenarios/worked-example/flags", &json!({"report_id": "r2", "flagged_false": true})).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    let token = v["token"].as_str().unwrap().to_string();
    assert_ne!(token, before_token);
    assert_eq!(v["changed"], json!(true));

    let after = get(&app, "/scenarios/worked-example/analysis/paths?n_subs=1").await;
    assert_ne!(after.body, before.body);
    let chains: Vec<Value> = after.json()["paths"].as_array().unwrap().iter().map(|p| p["chain"].clone()).collect();
    assert!(chains.iter().all(|c| !c.as_array().unwrap().contains(&json!("r2"))));

    // a stale token is refused, the current one accepted
    let stale = get(&app, &format!("/scenarios/worked-example/analysis/paths?n_subs=1&token={before_token}")).await;
    assert_eq!(stale.status, StatusCode::CONFLICT);
    let current = get(&app, &format!("/scenarios/worked-example/analysis/paths?n_subs=1&token={token}")).await;
    assert_eq!(current.body, after.body);

    // reverting the flag restores the original analysis
    post_json(&app, "/scenarios/worked-example/flags", &json!({"report_id": "r2", "flagged_false": false})).await;
    let restored = get(&app, "/scenarios/worked-example/analysis/paths?n_subs=1").await;
    assert_eq!(restored.body, before.body);

    let again = post_json(&app, "/scenarios/worked-example/flags", &json!({"report_id": "r2", "flagged_false": false})).await;
    assert_eq!(again.json()["changed"], json!(false));
}

#[tokio::test]
async fn evidence_map_before_reports_is_a_precondition_failure() {
    let app = app();
    let mut s = worked_example();
    s["reports"][0]["time"] = json!(60000);
    upload(&app, &s).await;
    let r = get(&app, "/scenarios/worked-example/evidence-map?t=0").await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json(), json!({"error": "t before all reports", "field": "t"}));
    let ok = get(&app, "/scenarios/worked-example/evidence-map?t=60000&cell=1000").await.json();
    assert_eq!((ok["width"].as_u64(), ok["height"].as_u64()), (Some(20), Some(10)));
    assert_eq!(ok["layers"], json!(["r1"]));
}

#[tokio::test]
async fn errors_carry_status_and_field() {
    let app = app();
    upload(&app, &worked_example()).await;
    let cases = [
        ("/scenarios/nope/analysis/paths", StatusCode::NOT_FOUND, None),
        ("/scenarios/worked-example/analysis/paths?n_subs=abc", StatusCode::BAD_REQUEST, Some("n_subs")),
        ("/scenarios/worked-example/analysis/paths?n_subs=0", StatusCode::BAD_REQUEST, Some("n_subs")),
        ("/scenarios/worked-example/analysis/paths?nsubs=2", StatusCode::BAD_REQUEST, Some("nsubs")),
        ("/scenarios/worked-example/analysis/paths?type=Z", StatusCode::BAD_REQUEST, Some("type")),
        ("/scenarios/worked-example/analysis/region", StatusCode::BAD_REQUEST, Some("rect")),
        ("/scenarios/worked-example/analysis/region?rect=1,2,3", StatusCode::BAD_REQUEST, Some("rect")),
        ("/scenarios/worked-example/evidence-map?t=0&cell=-5", StatusCode::BAD_REQUEST, Some("cell")),
        ("/scenarios/worked-example/graph?threshold=2", StatusCode::BAD_REQUEST, Some("threshold")),
        ("/scenarios/worked-example/shortest-path?from=1,1&to=30000,1", StatusCode::UNPROCESSABLE_ENTITY, Some("to")),
    ];
    for (uri, status, field) in cases {
        let r = get(&app, uri).await;
        assert_eq!(r.status, status, "{uri}: {}", String::from_utf8_lossy(&r.body));
        let v = r.json();
        assert!(v["error"].is_string(), "{uri}");
        assert_eq!(v["field"].as_str(), field, "{uri}");
    }
    let dup = post_json(&app, "/scenarios", &worked_example()).await;
    assert_eq!(dup.status, StatusCode::CONFLICT);
    let bad = post_json(&app, "/scenarios", &json!({"id": "x", "map": 5})).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    assert_eq!(bad.json()["field"], json!("map"));
    let flag = post_json(&app, "/scenarios/worked-example/flags", &json!({"report_id": "r9", "flagged_false": true})).await;
    assert_eq!(flag.status, StatusCode::NOT_FOUND);
    let flag = post_json(&app, "/scenarios/worked-example/flags", &json!({"report": "r1"})).await;
    assert_eq!(flag.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn report_ingestion_accepts_ndjson_and_json() {
    let app = app();
    let mut s = worked_example();
    s["reports"] = json!([]);
    upload(&app, &s).await;
    let ndjson = "{\"id\": \"r1\", \"time\": 0, \"position\": [2000, 5000], \"trust_p\": 0.6}\n\n{\"id\": \"r2\", \"time\": 1000000, \"position\": [8000, 5000], \"trust_p\": 0.5}\n";
    let r = send(&app, Method::POST, "/scenarios/worked-example/reports", "application/x-ndjson", ndjson).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
    assert_eq!(r.json()["ingested"], json!(2));
    let single = json!({"id": "r3", "time": 2000000, "position": [9000, 5000], "trust_p": 0.4});
    assert_eq!(post_json(&app, "/scenarios/worked-example/reports", &single).await.json()["ingested"], json!(1));
    let dup = post_json(&app, "/scenarios/worked-example/reports", &json!([single])).await;
    assert_eq!(dup.status, StatusCode::BAD_REQUEST);
    let broken = send(&app, Method::POST, "/scenarios/worked-example/reports", "application/x-ndjson", "{\"id\": \"r4\"}\n").await;
    assert_eq!(broken.status, StatusCode::BAD_REQUEST);
    let scenario = get(&app, "/scenarios/worked-example").await.json();
    assert_eq!(scenario["reports"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn put_replaces_and_checks_the_id() {
    let app = app();
    let first = upload(&app, &worked_example()).await;
    let mut s = worked_example();
    s["reports"][0]["trust_p"] = json!(0.9);
    let r = send(&app, Method::PUT, "/scenarios/worked-example", "application/json", s.to_string()).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_ne!(r.json()["token"].as_str().unwrap(), first);
    let r = send(&app, Method::PUT, "/scenarios/other", "application/json", s.to_string()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["field"], json!("id"));
}

#[tokio::test]
async fn geometry_and_region_endpoints() {
    let app = app();
    upload(&app, &worked_example()).await;
    let region = get(&app, "/scenarios/worked-example/analysis/region?rect=0,0,20000,10000").await.json();
    assert!((region["support"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    let empty = get(&app, "/scenarios/worked-example/analysis/region?rect=0,0,100,100").await.json();
    assert_eq!((empty["support"].as_f64(), empty["plausibility"].as_f64()), (Some(0.0), Some(1.0)));
    let windowed = get(&app, "/scenarios/worked-example/analysis/region?rect=0,0,20000,10000&window=0,10").await.json();
    assert!((windowed["support"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    let start = get(&app, "/scenarios/worked-example/analysis/incident-start?threshold=0.7").await.json();
    assert_eq!(start, json!({"start": 1000000}));
    let never = get(&app, "/scenarios/worked-example/analysis/incident-start?threshold=0.9").await.json();
    assert_eq!(never, json!({"start": null}));
    let path = get(&app, "/scenarios/worked-example/shortest-path?from=0,0&to=3000,4000").await.json();
    assert!((path["length_m"].as_f64().unwrap() - 5000.0).abs() < 1e-9);
    let graph = get(&app, "/scenarios/worked-example/graph").await.json();
    assert_eq!(graph["edges"].as_array().unwrap().len(), 1);
    let none = get(&app, "/scenarios/worked-example/graph?threshold=0.5").await.json();
    assert_eq!(none["edges"], json!([]));
    let counts = get(&app, "/scenarios/worked-example/analysis/counts").await.json();
    assert_eq!(counts["min_submarines"], json!(1));
}

#[tokio::test]
async fn archipelago_matches_the_goldens() {
    let app = app();
    let scenario = std::fs::read_to_string(fixtures().join("golden/scenario.json")).unwrap();
    let r = send(&app, Method::POST, "/scenarios", "application/json", scenario).await;
    assert_eq!(r.status, StatusCode::CREATED);
    for (uri, golden) in [
        ("/scenarios/archipelago/analysis/paths?n_subs=2&top_n=10", "paths.json"),
        ("/scenarios/archipelago/analysis/counts", "counts.json"),
        ("/scenarios/archipelago/graph", "graph.json"),
    ] {
        let want: Value = serde_json::from_str(&std::fs::read_to_string(fixtures().join("golden").join(golden)).unwrap()).unwrap();
        assert_eq!(get(&app, uri).await.json(), want, "{uri}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_flag_toggles_serialise() {
    let app = app();
    upload(&app, &worked_example()).await;
    let tasks: Vec<_> = (0..32)
        .map(|i| {
            let app = app.clone();
            tokio::spawn(async move {
                let body = json!({"report_id": if i % 2 == 0 { "r1" } else { "r2" }, "flagged_false": i % 4 < 2});
                post_json(&app, "/scenarios/worked-example/flags", &body).await.json()["token"]
                    .as_str()
                    .unwrap()
                    .to_string()
            })
        })
        .collect();
    let mut tokens = Vec::new();
    for t in tasks {
        tokens.push(t.await.unwrap());
    }
    tokens.sort();
    tokens.dedup();
    assert_eq!(tokens.len(), 32);
    // the final snapshot is whole: its token and content agree on every read
    let a = get(&app, "/scenarios/worked-example").await;
    let b = get(&app, &format!("/scenarios/worked-example?token={}", a.token.clone().unwrap())).await;
    assert_eq!(a.body, b.body);
}
