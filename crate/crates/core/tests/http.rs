use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use groundsmith::bundled::{self, world_by_id, WORLD_IDS};
use groundsmith::service::{router, AppState, ServiceConfig, WorldEntry};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> (Arc<AppState>, Router) {
    let entry = |id: &str| {
        let (w, l) = world_by_id(id).unwrap();
        WorldEntry::new(w, l).unwrap()
    };
    let mut config = ServiceConfig::new("toy_4x1".into(), entry("toy_4x1"), bundled::library());
    for id in WORLD_IDS {
        config.worlds.entry(id.into()).or_insert_with(|| entry(id));
    }
    let state = AppState::new(config);
    (state.clone(), router(state))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.unwrap_or("").to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn new_session(app: &Router, world: Option<&str>) -> String {
    let body = world.map(|w| json!({ "world_id": w }).to_string());
    let (status, v) = call(app, "POST", "/sessions", body.as_deref()).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn command(app: &Router, id: &str, body: Value) -> Value {
    let (status, v) = call(
        app,
        "POST",
        &format!("/sessions/{id}/command"),
        Some(&body.to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v
}

#[tokio::test]
async fn create_session_renders_initial_state() {
    let (_, app) = app();
    let (status, v) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    let state = &v["state"];
    assert_eq!(state["world_id"], "toy_4x1");
    assert_eq!(state["width"], 4);
    assert_eq!(state["agent_cell"], 0);
    assert_eq!(state["cells"].as_array().unwrap().len(), 4);
    assert_eq!(state["toys"].as_array().unwrap().len(), 2);
    assert!(state["holding"].is_null());
}

#[tokio::test]
async fn navigate_two_command_and_steps() {
    let (_, app) = app();
    let id = new_session(&app, None).await;
    let v = command(
        &app,
        &id,
        json!({"text": "go to the bedroom and then go to the kitchen"}),
    )
    .await;
    assert_eq!(v["cq"]["descriptor"], "navigate_two");
    assert_eq!(v["ltl"], "F ( bedroom & F ( kitchen ) )");
    assert_eq!(v["accepted"], true);
    let plan = v["plan"].as_array().unwrap().len();
    assert_eq!(plan, 3);

    let mut last = Value::Null;
    for _ in 0..plan {
        let (status, s) = call(&app, "POST", &format!("/sessions/{id}/step"), None).await;
        assert_eq!(status, StatusCode::OK);
        last = s;
    }
    assert_eq!(last["accepted"], true);
    assert_eq!(last["remaining_spec"], "true");
    assert_eq!(last["remaining_actions"], 0);

    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/step"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["kind"], "PlanExhausted");

    let (_, v) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(v["history"].as_array().unwrap().len(), 1);
    assert_eq!(v["state"]["agent_cell"], 1);
}

#[tokio::test]
async fn pickup_runs_to_holding() {
    let (_, app) = app();
    let id = new_session(&app, Some("toy_4x1")).await;
    let v = command(&app, &id, json!({"text": "pickup the sphere"})).await;
    assert_eq!(v["ltl"], "F ( holding_sphere )");
    let mut last = Value::Null;
    for _ in 0..v["plan"].as_array().unwrap().len() {
        last = call(&app, "POST", &format!("/sessions/{id}/step"), None)
            .await
            .1;
    }
    assert_eq!(last["accepted"], true);
    assert_eq!(last["state"]["holding"], "toy_sphere");

    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/reset"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(v["state"]["holding"].is_null());
}

#[tokio::test]
async fn homonym_without_pos_is_ambiguous() {
    let (_, app) = app();
    let id = new_session(&app, Some("toy_seen")).await;
    let v = command(
        &app,
        &id,
        json!({"text": "pickup the orange", "pos_disambiguation": false}),
    )
    .await;
    assert_eq!(v["error"]["kind"], "AmbiguousGrounding");
    assert_eq!(v["accepted"], false);
    assert!(v["plan"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn tagger_fault_is_arity_mismatch() {
    let (_, app) = app();
    let id = new_session(&app, None).await;
    let v = command(
        &app,
        &id,
        json!({"text": "pickup the sphere", "tagger_fault": true}),
    )
    .await;
    assert_eq!(v["error"]["kind"], "ArityMismatch");
}

#[tokio::test]
async fn error_statuses() {
    let (_, app) = app();
    let (status, v) = call(&app, "GET", "/sessions/nope/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["kind"], "UnknownSession");

    let (status, v) = call(&app, "POST", "/sessions", Some(r#"{"world_id":"mars"}"#)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["kind"], "UnknownWorld");

    let id = new_session(&app, None).await;
    let (status, v) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/command"),
        Some("{not json"),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["kind"], "MalformedBody");

    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/command"), Some("{}")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["kind"], "MalformedBody");

    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/step"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["kind"], "PlanExhausted");
}

#[tokio::test]
async fn idle_sessions_are_evicted() {
    let (state, app) = app();
    new_session(&app, None).await;
    assert_eq!(state.session_count(), 1);
    assert_eq!(state.evict_idle(Instant::now()).await, 0);
    let later = Instant::now() + Duration::from_secs(31 * 60);
    assert_eq!(state.evict_idle(later).await, 1);
    assert_eq!(state.session_count(), 0);
}
