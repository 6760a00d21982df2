use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use langreward::corpus::{ingest, level_table};
use langreward::harness::{Config, Harness};
use langreward::world::{generate_levels, LevelConfig};
use langreward_service::{router, AppState, ServiceConfig, SessionContext};

fn levels() -> Vec<langreward::world::Level> {
    generate_levels(0, 10, 5, &LevelConfig::default()).unwrap()
}

fn app(data_dir: Option<std::path::PathBuf>) -> Router {
    let ctx = SessionContext {
        harness: Harness::new(Config::default()).unwrap(),
        experiment_levels: levels(),
        net: None,
    };
    router(AppState::new(ctx, ServiceConfig { data_dir }))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

#[tokio::test]
async fn full_session_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(Some(dir.path().to_path_buf()));
    let (s, created) = json_call(&app, "POST", "/sessions", Some(json!({"model": "pragmatic", "seed": 4, "rf_id": 7}))).await;
    assert_eq!(s, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_string();
    assert_eq!(created["phase"], "acting");
    assert_eq!(created["episode_index"], 1);

    let (s, body) = json_call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"messages": []}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(body["kind"], "phase");

    let mut last_len = 1;
    for ep in 1..=10 {
        let (s, a) = json_call(&app, "POST", &format!("/sessions/{id}/act"), None).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(a["episode_index"], ep);
        assert!(!a["pickups"].as_array().unwrap().is_empty());
        let (s, _) = json_call(&app, "POST", &format!("/sessions/{id}/act"), None).await;
        assert_eq!(s, StatusCode::CONFLICT);
        let (s, f) = json_call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"messages": ["yellow is bad. good job"]}))).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(f["parses"].as_array().unwrap().len(), 2);
        let (_, view) = json_call(&app, "GET", &format!("/sessions/{id}"), None).await;
        let len = view["transcript"].as_array().unwrap().len();
        assert!(len > last_len);
        last_len = len;
    }
    let (_, view) = json_call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["phase"], "finished");
    assert_eq!(view["scores"].as_array().unwrap().len(), 10);
    assert!(view["mean_normalized_score"].is_number());
    let (s, _) = json_call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"messages": ["hi"]}))).await;
    assert_eq!(s, StatusCode::CONFLICT);

    // Transcript export re-ingests as corpus records, and matches the
    // persisted log.
    let (s, bytes) = call(&app, "GET", &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(s, StatusCode::OK);
    let path = dir.path().join("export.jsonl");
    std::fs::write(&path, &bytes).unwrap();
    let table = level_table(levels());
    let records = ingest(&path, &table).unwrap();
    assert_eq!(records.len(), 10);
    let persisted = ingest(&dir.path().join(format!("{id}.jsonl")), &table).unwrap();
    assert_eq!(persisted, records);
}

#[tokio::test]
async fn belief_in_view_matches_learner_state() {
    let app = app(None);
    let (_, created) = json_call(&app, "POST", "/sessions", Some(json!({"model": "literal"}))).await;
    let id = created["session_id"].as_str().unwrap();
    let b = &created["belief"];
    assert_eq!(b["state"]["kind"], "gaussian");
    let sigma = b["state"]["sigma"].as_array().unwrap();
    assert_eq!(sigma.len(), 81);
    assert_eq!(b["std"][0].as_f64().unwrap(), 5.0);
    json_call(&app, "POST", &format!("/sessions/{id}/act"), None).await;
    let (_, f) = json_call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"messages": ["blue squares are good"]}))).await;
    let (_, view) = json_call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["belief"]["mean"], f["mean_after"]);
    assert_eq!(view["belief"]["state"]["mu"], f["mean_after"]);
}

#[tokio::test]
async fn errors() {
    let app = app(None);
    let (s, b) = json_call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(b["kind"], "unknown_session");
    let (s, b) = json_call(&app, "POST", "/sessions", Some(json!({"rf_id": 99}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(b["kind"], "invalid_rf");
    let (s, b) = json_call(&app, "POST", "/sessions", Some(json!({"model": "neural"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(b["kind"], "not_ready");
    let (s, _) = json_call(&app, "POST", "/sessions", Some(json!({"model": "robot"}))).await;
    assert!(s.is_client_error());
}

#[tokio::test]
async fn sessions_are_isolated_and_seeded() {
    let app = app(None);
    let (_, a) = json_call(&app, "POST", "/sessions", Some(json!({"seed": 11}))).await;
    let (_, b) = json_call(&app, "POST", "/sessions", Some(json!({"seed": 11}))).await;
    let (ida, idb) = (a["session_id"].as_str().unwrap(), b["session_id"].as_str().unwrap());
    assert_ne!(ida, idb);
    assert_eq!(a["level_ids"], b["level_ids"]);
    let (_, acta) = json_call(&app, "POST", &format!("/sessions/{ida}/act"), None).await;
    let (_, viewb) = json_call(&app, "GET", &format!("/sessions/{idb}"), None).await;
    assert_eq!(viewb["phase"], "acting");
    assert_eq!(viewb["transcript"].as_array().unwrap().len(), 1);
    let (_, actb) = json_call(&app, "POST", &format!("/sessions/{idb}/act"), None).await;
    assert_eq!(acta["trajectory"], actb["trajectory"]);
}

#[tokio::test]
async fn concurrent_clients() {
    let app = app(None);
    let mut handles = Vec::new();
    for seed in 0..8u64 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let (_, c) = json_call(&app, "POST", "/sessions", Some(json!({"seed": seed}))).await;
            let id = c["session_id"].as_str().unwrap().to_string();
            for _ in 0..10 {
                json_call(&app, "POST", &format!("/sessions/{id}/act"), None).await;
                json_call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"messages": ["great"]}))).await;
            }
            let (_, v) = json_call(&app, "GET", &format!("/sessions/{id}"), None).await;
            v
        }));
    }
    for h in handles {
        let v = h.await.unwrap();
        assert_eq!(v["phase"], "finished");
        assert_eq!(v["scores"].as_array().unwrap().len(), 10);
    }
}

#[tokio::test]
async fn event_stream_replays_history() {
    let app = app(None);
    let (_, c) = json_call(&app, "POST", "/sessions", Some(json!({"seed": 2}))).await;
    let id = c["session_id"].as_str().unwrap();
    json_call(&app, "POST", &format!("/sessions/{id}/act"), None).await;
    let req = Request::builder().uri(format!("/sessions/{id}/events")).body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let mut body = resp.into_body();
    let mut text = String::new();
    while !text.contains("learner_acted") {
        let frame = body.frame().await.unwrap().unwrap();
        if let Some(d) = frame.data_ref() {
            text.push_str(std::str::from_utf8(d).unwrap());
        }
    }
    assert!(text.contains("event: session_started"));
    assert!(text.contains("id: 1"));
}
