//! HTTP front end for the decoder and the study harness.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/decode[?session=id]` | decode a raw request |
//! | POST | `/session` | start a session `{condition, seed?}` |
//! | GET | `/session/{id}/task/{n}` | task view, `n` in 1..=6 |
//! | POST | `/session/{id}/decision` | record a decision |
//! | GET | `/session/{id}/metrics` | session-scoped metrics |
//!
//! Errors use the envelope `{code, message, path}`.

mod error;
mod view;

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sigsem_core::harness::{
    compute_metrics, randomize_order, Decision, DecisionRecord, LogWriter, StudyCondition, Task,
};
use sigsem_core::model::Payload;
use sigsem_core::normalize::normalize_request;
use sigsem_core::{hex, Decoder, SigningRequest};

pub use error::{ApiError, ErrorBody};
pub use view::{raw_fields, RawField, SemanticBlock, TaskView};

pub const MAX_BODY_BYTES: usize = 1 << 20;

pub type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

#[derive(Debug)]
struct Session {
    condition: StudyCondition,
    order: Vec<String>,
    /// Payload fingerprints already decoded in this session.
    seen: HashSet<[u8; 32]>,
}

/// Shared service state. Decision appends go through one lock, so records for
/// a session are serialized.
pub struct AppState {
    decoder: Decoder,
    corpus: Arc<Vec<Task>>,
    sessions: RwLock<HashMap<String, Mutex<Session>>>,
    log: Mutex<LogWriter>,
    clock: Clock,
}

impl AppState {
    pub fn new(decoder: Decoder, corpus: Vec<Task>, log: LogWriter) -> Self {
        AppState {
            decoder,
            corpus: Arc::new(corpus),
            sessions: RwLock::default(),
            log: Mutex::new(log),
            clock: Arc::new(|| chrono::Utc::now().timestamp()),
        }
    }

    /// Fixes "now" for deadline rendering.
    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn corpus(&self) -> &[Task] {
        &self.corpus
    }

    fn task(&self, id: &str) -> Option<&Task> {
        self.corpus.iter().find(|t| t.id == id)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/decode", post(decode))
        .route("/session", post(create_session))
        .route("/session/{id}/task/{n}", get(task_view))
        .route("/session/{id}/decision", post(record))
        .route("/session/{id}/metrics", get(metrics))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// Serves on `127.0.0.1:port` until ctrl-c.
pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn body_text(body: Result<Bytes, BytesRejection>) -> Result<String, ApiError> {
    let bytes = body.map_err(|e| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", format!("body exceeds {MAX_BODY_BYTES} bytes"))
        } else {
            ApiError::new(e.status(), "bad_body", e.body_text())
        }
    })?;
    String::from_utf8(bytes.to_vec())
        .map_err(|_| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_json", "body is not UTF-8"))
}

fn json_body<T: for<'de> Deserialize<'de>>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let text = body_text(body)?;
    serde_json::from_str(&text).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))
}

fn fingerprint(req: &SigningRequest) -> [u8; 32] {
    let mut buf = req.method().rpc_name().as_bytes().to_vec();
    buf.extend(req.signer().map(|a| a.0).unwrap_or_default());
    match req.payload() {
        Payload::Transaction(tx) => buf.extend(serde_json::to_vec(tx).unwrap_or_default()),
        Payload::Message(m) => buf.extend(m),
        Payload::TypedData(t) => buf.extend(serde_json::to_vec(t).unwrap_or_default()),
    }
    hex::keccak256(buf)
}

#[derive(Deserialize)]
struct DecodeQuery {
    session: Option<String>,
}

async fn decode(
    State(state): State<Arc<AppState>>,
    Query(q): Query<DecodeQuery>,
    body: Result<Bytes, BytesRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let text = body_text(body)?;
    let req = normalize_request(&text, state.decoder.knowledge_base().contracts())
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()).at(e.path()))?;
    let replayed = match &q.session {
        Some(id) => {
            let sessions = state.sessions.read().expect("session lock");
            let session = sessions.get(id).ok_or_else(|| ApiError::not_found(format!("session {id}")))?;
            let fresh = session.lock().expect("session lock").seen.insert(fingerprint(&req));
            !fresh
        }
        None => false,
    };
    let out = state
        .decoder
        .decode_with(&req, (state.clock)(), replayed)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "missing_actor", e.to_string()).at(Some("params")))?;
    Ok(Json(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    condition: String,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
    condition: StudyCondition,
    task_order: Vec<String>,
    seed: u64,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req: NewSession = json_body(body)?;
    let condition: StudyCondition = req
        .condition
        .parse()
        .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "invalid_condition", e).at(Some("condition")))?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let order = randomize_order(&state.corpus, seed);
    let id = uuid::Uuid::new_v4().to_string();
    state.sessions.write().expect("session lock").insert(
        id.clone(),
        Mutex::new(Session {
            condition,
            order: order.clone(),
            seen: HashSet::new(),
        }),
    );
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: id,
            condition,
            task_order: order,
            seed,
        }),
    ))
}

fn session_info(state: &AppState, id: &str) -> Result<(StudyCondition, Vec<String>), ApiError> {
    let sessions = state.sessions.read().expect("session lock");
    let s = sessions.get(id).ok_or_else(|| ApiError::not_found(format!("session {id}")))?;
    let s = s.lock().expect("session lock");
    Ok((s.condition, s.order.clone()))
}

async fn task_view(
    State(state): State<Arc<AppState>>,
    Path((id, n)): Path<(String, String)>,
) -> Result<Json<TaskView>, ApiError> {
    let (condition, order) = session_info(&state, &id)?;
    let idx = n
        .parse::<usize>()
        .ok()
        .filter(|n| (1..=order.len()).contains(n))
        .ok_or_else(|| ApiError::not_found(format!("task {n} (expected 1..={})", order.len())))?;
    let task = state.task(&order[idx - 1]).expect("order only names corpus tasks");
    let semantic = match condition {
        StudyCondition::Baseline => None,
        StudyCondition::Semantic => Some(
            state
                .decoder
                .decode(&task.request, (state.clock)())
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "decode_failed", e.to_string()))?
                .into(),
        ),
    };
    Ok(Json(TaskView {
        session_id: id,
        condition,
        n: idx,
        total: order.len(),
        task_id: task.id.clone(),
        title: task.title.clone(),
        scenario_text: task.scenario_text.clone(),
        method: task.request.method(),
        rpc_method: task.request.method().rpc_name().to_string(),
        origin: task.request.context().origin().to_string(),
        raw_fields: raw_fields(task),
        request: task.request_json.clone(),
        semantic,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    task: String,
    decision: Decision,
    risk_rating: u8,
    clarity_rating: u8,
    confidence_rating: u8,
    started_at: i64,
    decided_at: i64,
}

async fn record(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let (condition, order) = session_info(&state, &id)?;
    let b: DecisionBody = json_body(body)?;
    if !order.contains(&b.task) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "unknown_task", format!("task {} is not in this session", b.task))
            .at(Some("task")));
    }
    let rec = DecisionRecord {
        session: id,
        task: b.task,
        condition,
        decision: b.decision,
        risk_rating: b.risk_rating,
        clarity_rating: b.clarity_rating,
        confidence_rating: b.confidence_rating,
        started_at: b.started_at,
        decided_at: b.decided_at,
    };
    use sigsem_core::error::HarnessError as H;
    state.log.lock().expect("log lock").append(rec.clone()).map_err(|e| match &e {
        H::DuplicateDecision { .. } => ApiError::new(StatusCode::CONFLICT, "duplicate_decision", e.to_string()),
        H::InvalidRating { field, .. } => {
            ApiError::new(StatusCode::BAD_REQUEST, "invalid_rating", e.to_string()).at(Some(field))
        }
        H::InvalidRecord(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_record", e.to_string()),
        _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "log_write_failed", e.to_string()),
    })?;
    Ok((StatusCode::CREATED, Json(rec)))
}

async fn metrics(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    session_info(&state, &id)?;
    let log = state.log.lock().expect("log lock").log().for_session(&id);
    match compute_metrics(&log, &state.corpus) {
        Ok(report) => Ok(Json(report)),
        Err(sigsem_core::error::HarnessError::EmptyLog) => {
            Err(ApiError::new(StatusCode::CONFLICT, "empty_log", "no decisions recorded for this session"))
        }
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "metrics_failed", e.to_string())),
    }
}
