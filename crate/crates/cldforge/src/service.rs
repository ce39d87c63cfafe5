//! HTTP JSON service.
//!
//! | route | |
//! |---|---|
//! | `POST /api/generate` | `{"dh", "strategy", "shots"?}` → generated diagram |
//! | `POST /api/evaluate` | `{"generated_digraph", "truth_digraph"? \| "truth_id"?, "threshold"?}` → evaluation report |
//! | `GET /api/corpus` | item summaries |
//! | `GET /api/corpus/{id}` | one item |
//! | `GET /api/transcripts/{id}` | the generation record behind a `transcripts_id` |
//! | `GET /api/strategies` | accepted strategy slugs |
//! | `GET /health` | `{"status": "ok", "provider": "mock" \| "live"}` |
//!
//! Errors are `{"error": str, "diagnostics": [str]}` with status 400 for bad
//! input, 404 for unknown ids, 413 over the body limit and 502 when the
//! provider fails.

use std::collections::{HashMap, VecDeque};
use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cldforge_core::{
    emit_digraph, emit_render_dot, enumerate_loops, evaluate, parse_digraph, CausalLoopDiagram,
    Corpus, CorpusItem, DotError, FeedbackLoop, LoopKind, ParseMode, Strategy, Threshold,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use crate::config::{ConfigError, ServiceConfig};
use crate::llm::{prompt_hash, CompletionProvider};
use crate::pipeline::{run_pipeline, GenerationRecord, PipelineError};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("address {0} is already in use")]
    AddressInUse(SocketAddr),
    #[error(transparent)]
    BadConfig(#[from] ConfigError),
    #[error("server error: {0}")]
    Io(#[from] io::Error),
}

/// Bounded, least-recently-used store of generation records.
#[derive(Debug)]
pub struct TranscriptStore {
    capacity: usize,
    records: HashMap<String, Arc<GenerationRecord>>,
    order: VecDeque<String>,
}

impl TranscriptStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            records: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    pub fn insert(&mut self, id: String, record: GenerationRecord) {
        if self.records.insert(id.clone(), Arc::new(record)).is_some() {
            self.order.retain(|k| *k != id);
        }
        self.order.push_back(id);
        while self.order.len() > self.capacity {
            if let Some(oldest) = self.order.pop_front() {
                self.records.remove(&oldest);
            }
        }
    }

    /// Marks the entry as recently used.
    pub fn get(&mut self, id: &str) -> Option<Arc<GenerationRecord>> {
        let record = self.records.get(id)?.clone();
        if let Some(at) = self.order.iter().position(|k| k == id) {
            let key = self.order.remove(at).expect("position is in range");
            self.order.push_back(key);
        }
        Some(record)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub struct AppState {
    corpus: Arc<Corpus>,
    provider: Arc<dyn CompletionProvider>,
    threshold: Threshold,
    shots: usize,
    permits: Semaphore,
    transcripts: Mutex<TranscriptStore>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(
        corpus: Corpus,
        provider: Arc<dyn CompletionProvider>,
        config: &ServiceConfig,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            corpus: Arc::new(corpus),
            provider,
            threshold: config.threshold()?,
            shots: config.shots,
            permits: Semaphore::new(config.parallelism),
            transcripts: Mutex::new(TranscriptStore::new(config.transcript_capacity)),
            next_id: AtomicU64::new(1),
        })
    }

    fn store(&self, record: GenerationRecord) -> String {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let digest = prompt_hash(&record.to_json_pretty());
        let id = format!("t{n}-{}", &digest[..12]);
        self.transcripts.lock().unwrap().insert(id.clone(), record);
        id
    }
}

pub fn router(state: Arc<AppState>, body_limit: usize) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/strategies", get(strategies))
        .route("/api/generate", post(generate))
        .route("/api/evaluate", post(evaluate_digraphs))
        .route("/api/corpus", get(corpus_list))
        .route("/api/corpus/{id}", get(corpus_item))
        .route("/api/transcripts/{id}", get(transcript))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

/// Binds `config.listen` and serves until interrupted.
pub async fn serve(config: &ServiceConfig, state: Arc<AppState>) -> Result<(), ServeError> {
    let listener = TcpListener::bind(config.listen).await.map_err(|e| {
        if e.kind() == io::ErrorKind::AddrInUse {
            ServeError::AddressInUse(config.listen)
        } else {
            ServeError::Io(e)
        }
    })?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, config.body_limit_bytes))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: String,
    diagnostics: Vec<String>,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        Self {
            status,
            error: error.into(),
            diagnostics: Vec::new(),
        }
    }

    fn bad_request(error: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": self.error, "diagnostics": self.diagnostics});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn read_json<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = body.map_err(|r| ApiError::new(r.status(), r.body_text()))?;
    serde_json::from_slice(&bytes).map_err(|e| ApiError::bad_request(format!("invalid request: {e}")))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({"status": "ok", "provider": state.provider.kind()}))
}

async fn strategies(State(state): State<Arc<AppState>>) -> Json<Value> {
    let slugs: Vec<&str> = Strategy::ALL.iter().map(|s| s.slug()).collect();
    Json(json!({"strategies": slugs, "default_shots": state.shots}))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateRequest {
    dh: String,
    strategy: String,
    #[serde(default)]
    shots: Option<usize>,
}

#[derive(Debug, Serialize)]
struct LoopView {
    label: String,
    length: usize,
    kind: LoopKind,
    members: Vec<String>,
}

fn loop_views(loops: &[FeedbackLoop]) -> Vec<LoopView> {
    let (mut reinforcing, mut balancing) = (0, 0);
    loops
        .iter()
        .map(|l| {
            let n = match l.kind() {
                LoopKind::Reinforcing => &mut reinforcing,
                LoopKind::Balancing => &mut balancing,
            };
            *n += 1;
            LoopView {
                label: format!("{}{}", l.kind().letter(), n),
                length: l.len(),
                kind: l.kind(),
                members: l.members().map(|m| m.raw().to_string()).collect(),
            }
        })
        .collect()
}

/// `(loops, diagnostic if enumeration gave up)`
fn analyse(diagram: &CausalLoopDiagram) -> (Vec<LoopView>, Option<String>) {
    match enumerate_loops(diagram) {
        Ok(loops) => (loop_views(&loops), None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    }
}

#[derive(Debug, Serialize)]
struct GenerateResponse {
    digraph: Option<String>,
    render_dot: Option<String>,
    variables: Vec<String>,
    loops: Vec<LoopView>,
    diagnostics: Vec<String>,
    transcripts_id: String,
}

async fn generate(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<GenerateResponse> {
    let request: GenerateRequest = read_json(body)?;
    if request.dh.trim().is_empty() {
        return Err(ApiError::bad_request("dh must not be empty"));
    }
    let strategy: Strategy = request
        .strategy
        .parse()
        .map_err(|e: cldforge_core::PromptError| ApiError::bad_request(e.to_string()))?;
    let shots = request.shots.unwrap_or(state.shots);

    let _permit = state
        .permits
        .acquire()
        .await
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "shutting down"))?;
    let worker = state.clone();
    let record = tokio::task::spawn_blocking(move || {
        run_pipeline(worker.provider.as_ref(), strategy, &request.dh, &worker.corpus, shots)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| match e {
        PipelineError::Provider(e) => ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()),
        other => ApiError::bad_request(other.to_string()),
    })?;

    let mut diagnostics: Vec<String> = record.diagnostics.iter().map(|d| d.to_string()).collect();
    let (digraph, render_dot, variables, loops) = match &record.diagram {
        Some(d) => {
            let (loops, overflow) = analyse(d);
            diagnostics.extend(overflow);
            (
                Some(emit_digraph(d)),
                Some(emit_render_dot(d, true)),
                d.variables().iter().map(|v| v.raw().to_string()).collect(),
                loops,
            )
        }
        None => (None, None, Vec::new(), Vec::new()),
    };
    let transcripts_id = state.store(record);
    Ok(Json(GenerateResponse {
        digraph,
        render_dot,
        variables,
        loops,
        diagnostics,
        transcripts_id,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    generated_digraph: String,
    #[serde(default)]
    truth_digraph: Option<String>,
    #[serde(default)]
    truth_id: Option<String>,
    #[serde(default)]
    threshold: Option<f64>,
}

fn parse_input(field: &str, text: &str) -> Result<CausalLoopDiagram, ApiError> {
    match parse_digraph(text, ParseMode::Strict) {
        Ok(parsed) => Ok(parsed.diagram),
        Err(DotError::Syntax(d)) => Err(ApiError {
            status: StatusCode::BAD_REQUEST,
            error: format!("{field} does not parse"),
            diagnostics: vec![d.to_string()],
        }),
        Err(e) => Err(ApiError::bad_request(format!("{field}: {e}"))),
    }
}

async fn evaluate_digraphs(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let request: EvaluateRequest = read_json(body)?;
    let threshold = match request.threshold {
        Some(t) => Threshold::new(t)
            .ok_or_else(|| ApiError::bad_request(format!("threshold {t} is outside (0, 1]")))?,
        None => state.threshold,
    };
    let generated = parse_input("generated_digraph", &request.generated_digraph)?;
    let truth = match (&request.truth_digraph, &request.truth_id) {
        (Some(text), None) => parse_input("truth_digraph", text)?,
        (None, Some(id)) => state
            .corpus
            .get(id)
            .ok_or_else(|| ApiError::bad_request(format!("unknown corpus item {id:?}")))?
            .ground_truth
            .clone(),
        _ => {
            return Err(ApiError::bad_request(
                "give exactly one of truth_digraph and truth_id",
            ))
        }
    };
    let report = tokio::task::spawn_blocking(move || evaluate(&generated, &truth, threshold))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(report).into_response())
}

#[derive(Debug, Serialize)]
struct LoopSummary {
    length: usize,
    kind: LoopKind,
}

#[derive(Debug, Serialize)]
struct CorpusSummary<'a> {
    id: &'a str,
    source: &'a str,
    variable_count: usize,
    link_count: usize,
    loops: Vec<LoopSummary>,
}

async fn corpus_list(State(state): State<Arc<AppState>>) -> Json<Value> {
    let summaries: Vec<CorpusSummary> = state
        .corpus
        .items()
        .iter()
        .map(|item| CorpusSummary {
            id: &item.id,
            source: &item.source,
            variable_count: item.ground_truth.variables().len(),
            link_count: item.ground_truth.links().len(),
            loops: item
                .loop_signature()
                .unwrap_or_default()
                .into_iter()
                .map(|(length, kind)| LoopSummary { length, kind })
                .collect(),
        })
        .collect();
    Json(json!(summaries))
}

/// Full view of an item, shared with `cldforge corpus show`.
pub fn corpus_item_json(item: &CorpusItem) -> Value {
    let (loops, _) = analyse(&item.ground_truth);
    json!({
        "id": item.id,
        "dh": item.dh,
        "digraph": emit_digraph(&item.ground_truth),
        "source": item.source,
        "expected_loops": item.expected_loops,
        "low_confidence_links": item.low_confidence_links,
        "variables": item.ground_truth.variables().iter().map(|v| v.raw()).collect::<Vec<_>>(),
        "exogenous": item.ground_truth.exogenous_variables().iter().map(|v| v.raw()).collect::<Vec<_>>(),
        "loops": loops,
    })
}

async fn corpus_item(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Value> {
    let item = state
        .corpus
        .get(&id)
        .ok_or_else(|| ApiError::not_found("corpus item", &id))?;
    Ok(Json(corpus_item_json(item)))
}

async fn transcript(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let record = state
        .transcripts
        .lock()
        .unwrap()
        .get(&id)
        .ok_or_else(|| ApiError::not_found("transcript", &id))?;
    Ok(Json(record.as_ref().clone()).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ProviderMeta;

    fn record(n: usize) -> GenerationRecord {
        GenerationRecord {
            item_id: None,
            strategy: Strategy::Baseline,
            dh: format!("dh {n}"),
            stage_transcripts: Vec::new(),
            variables: None,
            diagram: None,
            diagnostics: Vec::new(),
            provider_meta: ProviderMeta {
                model_id: "m".into(),
                latency_ms: None,
                prompt_tokens: None,
                completion_tokens: None,
            },
            error: None,
        }
    }

    #[test]
    fn lru_evicts_least_recently_used() {
        let mut store = TranscriptStore::new(2);
        store.insert("a".into(), record(1));
        store.insert("b".into(), record(2));
        assert!(store.get("a").is_some());
        store.insert("c".into(), record(3));
        assert_eq!(store.len(), 2);
        assert!(store.get("b").is_none());
        assert_eq!(store.get("a").unwrap().dh, "dh 1");
        assert!(store.get("c").is_some());
    }

    #[test]
    fn reinserting_does_not_grow() {
        let mut store = TranscriptStore::new(2);
        store.insert("a".into(), record(1));
        store.insert("a".into(), record(2));
        assert_eq!(store.len(), 1);
        assert_eq!(store.get("a").unwrap().dh, "dh 2");
    }
}
