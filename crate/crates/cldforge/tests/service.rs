mod common;

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use cldforge::service::{router, AppState};
use cldforge::{MockProvider, ServiceConfig};
use cldforge_core::{bundled_goldens, emit_digraph, RABBIT_DH};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct App {
    router: Router,
    _fixtures: TempDir,
}

fn app_with(config: ServiceConfig, prose: &[&str]) -> App {
    let fixtures = common::golden_fixtures(prose);
    let provider = Arc::new(MockProvider::from_dir(fixtures.path()).unwrap());
    let state = AppState::new(bundled_goldens(), provider, &config).unwrap();
    App {
        router: router(Arc::new(state), config.body_limit_bytes),
        _fixtures: fixtures,
    }
}

fn app() -> App {
    app_with(ServiceConfig::default(), &[])
}

async fn call(app: &App, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let response = app.router.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    let value = serde_json::from_slice(&bytes)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&bytes)));
    (status, value)
}

async fn get(app: &App, uri: &str) -> (StatusCode, Value) {
    call(app, "GET", uri, None).await
}

async fn post(app: &App, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", uri, Some(body.to_string())).await
}

fn assert_error(status: StatusCode, body: &Value, expected: StatusCode) {
    assert_eq!(status, expected, "{body}");
    common::assert_schema("error", body);
}

#[tokio::test]
async fn health_and_strategies() {
    let app = app();
    let (status, body) = get(&app, "/health").await;
    assert_eq!(status, StatusCode::OK);
    common::assert_schema("health", &body);
    assert_eq!(body["provider"], "mock");

    let (status, body) = get(&app, "/api/strategies").await;
    assert_eq!(status, StatusCode::OK);
    common::assert_schema("strategies", &body);
    assert_eq!(body["strategies"], json!(["baseline", "minimal", "guided", "two-stage"]));
}

#[tokio::test]
async fn generate_rabbit() {
    let app = app();
    let (status, body) = post(&app, "/api/generate", json!({"dh": RABBIT_DH, "strategy": "two-stage"})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    common::assert_schema("generate_response", &body);
    let corpus = bundled_goldens();
    let truth = &corpus.get("rabbit-population").unwrap().ground_truth;
    assert_eq!(body["digraph"], Value::String(emit_digraph(truth)));
    assert_eq!(body["variables"].as_array().unwrap().len(), 3);
    assert_eq!(body["loops"], json!([{
        "label": "R1", "length": 2, "kind": "Reinforcing",
        "members": ["births", "rabbit population"],
    }]));
    assert!(body["render_dot"].as_str().unwrap().contains("R1"));

    let id = body["transcripts_id"].as_str().unwrap();
    let (status, record) = get(&app, &format!("/api/transcripts/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    common::assert_schema("generation_record", &record);
    assert_eq!(record["stage_transcripts"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn generate_prose_returns_diagnostic() {
    let app = app_with(ServiceConfig::default(), &["rabbit-population"]);
    let (status, body) = post(&app, "/api/generate", json!({"dh": RABBIT_DH, "strategy": "baseline"})).await;
    assert_eq!(status, StatusCode::OK);
    common::assert_schema("generate_response", &body);
    assert!(body["digraph"].is_null());
    assert!(body["diagnostics"][0].as_str().unwrap().contains("no digraph found"));
}

#[tokio::test]
async fn generate_rejects_bad_input() {
    let app = app();
    let (status, body) = post(&app, "/api/generate", json!({"dh": "  ", "strategy": "guided"})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);

    let (status, body) = post(&app, "/api/generate", json!({"dh": RABBIT_DH, "strategy": "bogus"})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);

    let (status, body) = call(&app, "POST", "/api/generate", Some("{not json".into())).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);

    let (status, body) = post(&app, "/api/generate", json!({"dh": "Unseen text.", "strategy": "guided"})).await;
    assert_error(status, &body, StatusCode::BAD_GATEWAY);
}

#[tokio::test]
async fn oversized_body_is_413() {
    let config = ServiceConfig {
        body_limit_bytes: 256,
        ..ServiceConfig::default()
    };
    let app = app_with(config, &[]);
    let dh = "x".repeat(1024);
    let (status, body) = post(&app, "/api/generate", json!({"dh": dh, "strategy": "guided"})).await;
    assert_error(status, &body, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn evaluate_perturbed_against_corpus_id() {
    let app = app();
    let (status, body) = post(
        &app,
        "/api/evaluate",
        json!({"generated_digraph": common::PERTURBED_CAR_INVENTORY, "truth_id": "new-car-inventory"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    common::assert_schema("eval_report", &body);
    let f1 = body["link_strict"]["f1"].as_f64().unwrap();
    assert!((f1 - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-9);
    assert_eq!(body["polarity_accuracy"], 0.75);
}

#[tokio::test]
async fn evaluate_input_errors() {
    let app = app();
    let digraph = emit_digraph(&bundled_goldens().items()[0].ground_truth);

    let (status, body) = post(&app, "/api/evaluate", json!({"generated_digraph": digraph})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);

    let both = json!({"generated_digraph": digraph, "truth_digraph": digraph, "truth_id": "rabbit-population"});
    let (status, body) = post(&app, "/api/evaluate", both).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);

    let (status, body) =
        post(&app, "/api/evaluate", json!({"generated_digraph": digraph, "truth_id": "nope"})).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);

    let bad = json!({"generated_digraph": "digraph {\n\"a\" -> \n}", "truth_digraph": digraph});
    let (status, body) = post(&app, "/api/evaluate", bad).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
    assert!(!body["diagnostics"].as_array().unwrap().is_empty());

    let th = json!({"generated_digraph": digraph, "truth_digraph": digraph, "threshold": 1.5});
    let (status, body) = post(&app, "/api/evaluate", th).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn corpus_endpoints() {
    let app = app();
    let (status, body) = get(&app, "/api/corpus").await;
    assert_eq!(status, StatusCode::OK);
    common::assert_schema("corpus_list", &body);

    for item in bundled_goldens().items() {
        let (status, body) = get(&app, &format!("/api/corpus/{}", item.id)).await;
        assert_eq!(status, StatusCode::OK);
        common::assert_schema("corpus_item", &body);
        assert_eq!(body["digraph"], Value::String(emit_digraph(&item.ground_truth)));
    }

    let (status, body) = get(&app, "/api/corpus/missing").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/api/transcripts/t1-000000000000").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn transcripts_are_evicted_oldest_first() {
    let config = ServiceConfig {
        transcript_capacity: 2,
        ..ServiceConfig::default()
    };
    let app = app_with(config, &[]);
    let mut ids = Vec::new();
    for strategy in ["baseline", "minimal", "guided"] {
        let (_, body) = post(&app, "/api/generate", json!({"dh": RABBIT_DH, "strategy": strategy})).await;
        ids.push(body["transcripts_id"].as_str().unwrap().to_string());
    }
    assert_eq!(get(&app, &format!("/api/transcripts/{}", ids[0])).await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, &format!("/api/transcripts/{}", ids[1])).await.0, StatusCode::OK);
    assert_eq!(get(&app, &format!("/api/transcripts/{}", ids[2])).await.0, StatusCode::OK);
}

#[tokio::test]
async fn cli_and_service_agree() {
    let app = app();
    let fixtures = common::golden_fixtures(&[]);
    for strategy in ["baseline", "minimal", "guided", "two-stage"] {
        let (_, body) = post(&app, "/api/generate", json!({"dh": RABBIT_DH, "strategy": strategy})).await;
        let out = common::cldforge(
            &["generate", "--dh", "-", "--strategy", strategy, "--fixtures", fixtures.path().to_str().unwrap()],
            Some(RABBIT_DH),
        );
        assert_eq!(common::text(&out.stdout), format!("{}\n", body["digraph"].as_str().unwrap()));
    }
}
