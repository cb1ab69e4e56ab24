//! Route table and handlers.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use evtrack_core::analysis::{count_intervals, evidence_region, incident_start, ranked_paths};
use evtrack_core::connection::build_graph;
use evtrack_core::evidence_map::{snapshot, MapParams};
use evtrack_core::geometry::{shortest_path, Point, Rect};
use evtrack_core::scenario::{parse_report_stream, ReportFilter, Scenario, ScenarioError, Timestamp};
use serde::{Deserialize, Serialize};
use tower_http::trace::TraceLayer;

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::state::{AppState, Snapshot};

pub const TOKEN_HEADER: &str = "x-snapshot-token";

type Shared = Arc<AppState>;
type Params = BTreeMap<String, String>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/scenarios", post(create_scenario))
        .route("/scenarios/{id}", get(get_scenario).put(put_scenario))
        .route("/scenarios/{id}/reports", post(post_reports))
        .route("/scenarios/{id}/flags", post(post_flag))
        .route("/scenarios/{id}/graph", get(graph))
        .route("/scenarios/{id}/analysis/paths", get(paths))
        .route("/scenarios/{id}/analysis/counts", get(counts))
        .route("/scenarios/{id}/analysis/region", get(region))
        .route("/scenarios/{id}/analysis/incident-start", get(incident))
        .route("/scenarios/{id}/evidence-map", get(evidence_map))
        .route("/scenarios/{id}/shortest-path", get(path_between))
        .layer(TraceLayer::new_for_http())
        .with_state(state)
}

fn json_response(status: StatusCode, body: Bytes, token: &str) -> Response {
    let mut resp = (status, body).into_response();
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    if let Ok(v) = HeaderValue::from_str(token) {
        headers.insert(TOKEN_HEADER, v);
    }
    resp
}

fn to_body(v: &impl Serialize) -> Result<Vec<u8>, ApiError> {
    let mut body = serde_json::to_vec(v).map_err(|e| ApiError::Internal(e.to_string()))?;
    body.push(b'\n');
    Ok(body)
}

fn check_params(q: &Params, allowed: &[&str]) -> Result<(), ApiError> {
    match q.keys().find(|k| *k != "token" && !allowed.contains(&k.as_str())) {
        Some(k) => Err(ApiError::bad(k, format!("unknown query parameter `{k}`"))),
        None => Ok(()),
    }
}

fn param<T: FromStr>(q: &Params, name: &str) -> Result<Option<T>, ApiError> {
    q.get(name)
        .map(|v| v.trim().parse().map_err(|_| ApiError::bad(name, format!("cannot parse `{v}`"))))
        .transpose()
}

fn required<T: FromStr>(q: &Params, name: &str) -> Result<T, ApiError> {
    param(q, name)?.ok_or_else(|| ApiError::bad(name, "required"))
}

fn numbers<T: FromStr>(q: &Params, name: &str, count: usize) -> Result<Option<Vec<T>>, ApiError> {
    let Some(v) = q.get(name) else { return Ok(None) };
    let parts: Vec<T> = v
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| ApiError::bad(name, format!("cannot parse `{v}`")))?;
    if parts.len() != count {
        return Err(ApiError::bad(name, format!("expected {count} comma-separated numbers")));
    }
    Ok(Some(parts))
}

fn point(q: &Params, name: &str) -> Result<Point, ApiError> {
    let v: Vec<f64> = numbers(q, name, 2)?.ok_or_else(|| ApiError::bad(name, "required"))?;
    Ok(Point::new(v[0], v[1]))
}

fn rect(q: &Params) -> Result<Option<Rect>, ApiError> {
    Ok(numbers::<f64>(q, "rect", 4)?.map(|v| Rect::from_corners(Point::new(v[0], v[1]), Point::new(v[2], v[3]))))
}

fn window(q: &Params) -> Result<Option<[Timestamp; 2]>, ApiError> {
    Ok(numbers::<i64>(q, "window", 2)?.map(|v| [Timestamp(v[0]), Timestamp(v[1])]))
}

/// Serves a read from the cache or computes it on the blocking pool. The
/// key is the snapshot token plus the route and its canonical query, so a
/// repeated request against the same snapshot returns identical bytes.
async fn read<F>(st: Shared, id: String, route: &'static str, q: Params, allowed: &[&str], f: F) -> Result<Response, ApiError>
where
    F: FnOnce(&Scenario, &Params, &ServiceConfig) -> Result<Vec<u8>, ApiError> + Send + 'static,
{
    check_params(&q, allowed)?;
    let Snapshot { token, scenario } = st.current(&id, q.get("token").map(String::as_str))?;
    let query: Vec<String> = q.iter().filter(|(k, _)| *k != "token").map(|(k, v)| format!("{k}={v}")).collect();
    let key = format!("{token}/{id}/{route}?{}", query.join("&"));
    if let Some(body) = st.cached(&key) {
        return Ok(json_response(StatusCode::OK, body, &token));
    }
    let worker = st.clone();
    let body = tokio::task::spawn_blocking(move || f(&scenario, &q, &worker.config))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let body = Bytes::from(body);
    st.store(key, body.clone());
    Ok(json_response(StatusCode::OK, body, &token))
}

#[derive(Serialize)]
struct Written<'a> {
    id: &'a str,
    token: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    ingested: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    changed: Option<bool>,
}

fn written(status: StatusCode, snap: &Snapshot, ingested: Option<usize>, changed: Option<bool>) -> Result<Response, ApiError> {
    let body = to_body(&Written {
        id: &snap.scenario.id,
        token: &snap.token,
        ingested,
        changed,
    })?;
    Ok(json_response(status, body.into(), &snap.token))
}

fn parse_scenario(st: &AppState, body: &Bytes) -> Result<Scenario, ApiError> {
    let text = std::str::from_utf8(body).map_err(|_| ApiError::bad("body", "not UTF-8"))?;
    Ok(Scenario::from_json_str(text, st.config.scenario_dir.as_deref())?)
}

async fn create_scenario(State(st): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let scenario = parse_scenario(&st, &body)?;
    let snap = st.insert(scenario, false)?;
    tracing::info!(id = %snap.scenario.id, token = %snap.token, "scenario created");
    written(StatusCode::CREATED, &snap, None, None)
}

async fn put_scenario(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let scenario = parse_scenario(&st, &body)?;
    if scenario.id != id {
        return Err(ApiError::bad("id", format!("body id `{}` does not match `{id}`", scenario.id)));
    }
    let snap = st.insert(scenario, true)?;
    tracing::info!(id = %id, token = %snap.token, "scenario replaced");
    written(StatusCode::OK, &snap, None, None)
}

async fn get_scenario(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "scenario", q, &[], |s, _, _| Ok(s.to_json_string().into_bytes())).await
}

/// Accepts NDJSON (one report per line), or with a JSON content type a
/// single report object or an array of them.
async fn post_reports(State(st): State<Shared>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad("body", "not UTF-8"))?;
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let stream = if is_json {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ApiError::bad("body", e.to_string()))?;
        let items = match value {
            serde_json::Value::Array(items) => items,
            v => vec![v],
        };
        items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n")
    } else {
        text.to_string()
    };
    let reports = parse_report_stream(&stream)?;
    let (snap, n) = st.update(&id, |s| {
        let n = reports.len();
        for r in reports {
            s.ingest_report(r)?;
        }
        Ok(n)
    })?;
    tracing::info!(id = %id, token = %snap.token, ingested = n, "reports ingested");
    written(StatusCode::OK, &snap, Some(n), None)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlagRequest {
    report_id: String,
    flagged_false: bool,
}

async fn post_flag(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: FlagRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad("body", e.to_string()))?;
    let (snap, changed) = st.update(&id, |s| match s.set_flag(&req.report_id, req.flagged_false) {
        Ok(previous) => Ok(previous != req.flagged_false),
        Err(ScenarioError::UnknownReference { id: r, .. }) => Err(ApiError::NotFound(format!("no report `{r}` in scenario `{id}`"))),
        Err(e) => Err(e.into()),
    })?;
    tracing::info!(id = %id, token = %snap.token, report = %req.report_id, flagged = req.flagged_false, "flag set");
    written(StatusCode::OK, &snap, None, Some(changed))
}

fn type_param(q: &Params) -> Option<&str> {
    q.get("type").map(String::as_str)
}

async fn graph(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "graph", q, &["type", "threshold"], |s, q, _| {
        let threshold: Option<f64> = param(q, "threshold")?;
        if threshold.is_some_and(|t| !(0.0..=1.0).contains(&t)) {
            return Err(ApiError::bad("threshold", "must lie in [0, 1]"));
        }
        let g = build_graph(s, &ReportFilter::analysis(), type_param(q))?;
        to_body(&g.export(threshold))
    })
    .await
}

async fn paths(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "paths", q, &["type", "n_subs", "top_n"], |s, q, cfg| {
        let n_subs = param(q, "n_subs")?.unwrap_or(1);
        let top_n = param(q, "top_n")?;
        let g = build_graph(s, &ReportFilter::analysis(), type_param(q))?;
        to_body(&ranked_paths(&g, n_subs, top_n, &cfg.analysis_options())?)
    })
    .await
}

async fn counts(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "counts", q, &["type"], |s, q, cfg| {
        let g = build_graph(s, &ReportFilter::analysis(), type_param(q))?;
        to_body(&count_intervals(&g, &cfg.analysis_options())?)
    })
    .await
}

async fn region(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "region", q, &["rect", "window"], |s, q, _| {
        let rect = rect(q)?.ok_or_else(|| ApiError::bad("rect", "required"))?;
        to_body(&evidence_region(s, rect, window(q)?)?)
    })
    .await
}

#[derive(Serialize)]
struct IncidentStart {
    start: Option<Timestamp>,
}

async fn incident(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "incident-start", q, &["rect", "threshold"], |s, q, _| {
        let threshold = required(q, "threshold")?;
        let rect = rect(q)?.unwrap_or(*s.map().bounds());
        to_body(&IncidentStart {
            start: incident_start(s, rect, threshold)?,
        })
    })
    .await
}

async fn evidence_map(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "evidence-map", q, &["t", "cell", "type"], |s, q, cfg| {
        let t = Timestamp(required(q, "t")?);
        let params = MapParams {
            cell_size_m: param(q, "cell")?.or(cfg.cell_size_m),
            ..cfg.map_params()
        };
        params.validate().map_err(|e| match e.field() {
            Some("cell_size_m") => ApiError::bad("cell", e.to_string()),
            _ => e.into(),
        })?;
        to_body(&snapshot(s, t, type_param(q), &params)?)
    })
    .await
}

async fn path_between(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<Params>) -> Result<Response, ApiError> {
    read(st, id, "shortest-path", q, &["from", "to", "type"], |s, q, _| {
        let (from, to) = (point(q, "from")?, point(q, "to")?);
        let sub = s.resolve_type(type_param(q))?;
        to_body(&shortest_path(s.map(), from, to, sub.draught_m)?)
    })
    .await
}
