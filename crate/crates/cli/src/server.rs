//! JSON stepping protocol over HTTP.
//!
//! Each session sits behind its own async mutex so concurrent requests on
//! one session are serialized; the session table itself is only locked
//! briefly. Idle sessions are swept on every request.

use std::collections::hash_map::RandomState;
use std::collections::HashMap;
use std::hash::BuildHasher;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use aeff_core::session::{Action, Diagnostic, Session, StateView, DEFAULT_HISTORY};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{EXIT_ERROR, EXIT_OK, EXIT_SERVE};

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub static_dir: Option<PathBuf>,
    pub idle_timeout: Duration,
    pub history_limit: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { static_dir: None, idle_timeout: Duration::from_secs(30 * 60), history_limit: DEFAULT_HISTORY }
    }
}

struct Entry {
    session: Session,
    last_used: Instant,
}

type Slot = Arc<tokio::sync::Mutex<Entry>>;

struct Shared {
    sessions: Mutex<HashMap<String, Slot>>,
    config: ServerConfig,
    counter: AtomicU64,
    hasher: RandomState,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        AppState(Arc::new(Shared {
            sessions: Mutex::new(HashMap::new()),
            config,
            counter: AtomicU64::new(0),
            hasher: RandomState::new(),
        }))
    }

    pub fn session_count(&self) -> usize {
        self.0.sessions.lock().expect("session table").len()
    }

    fn fresh_id(&self) -> String {
        let n = self.0.counter.fetch_add(1, Ordering::Relaxed);
        format!("{:016x}{n:x}", self.0.hasher.hash_one((n, Instant::now())))
    }

    /// Drops sessions idle for longer than the timeout. Busy sessions are
    /// in use and therefore not idle.
    fn sweep(&self) {
        let timeout = self.0.config.idle_timeout;
        self.0.sessions.lock().expect("session table").retain(|_, slot| match slot.try_lock() {
            Ok(e) => e.last_used.elapsed() <= timeout,
            Err(_) => true,
        });
    }

    fn slot(&self, id: &str) -> Result<Slot, ApiError> {
        self.sweep();
        self.0
            .sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(Diagnostic::new("notFound", format!("no session `{id}`"))))
    }
}

pub struct ApiError {
    error: Diagnostic,
    diagnostics: Vec<Diagnostic>,
}

impl ApiError {
    fn new(error: Diagnostic) -> Self {
        ApiError { error, diagnostics: Vec::new() }
    }

    fn status(&self) -> StatusCode {
        match self.error.kind.as_str() {
            "conflict" => StatusCode::CONFLICT,
            "notFound" => StatusCode::NOT_FOUND,
            "badRequest" => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(Diagnostic::new("badRequest", r.body_text()))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        let body = if self.diagnostics.len() > 1 {
            json!({ "error": self.error, "diagnostics": self.diagnostics })
        } else {
            json!({ "error": self.error })
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Deserialize)]
struct CreateBody {
    source: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct StepBody {
    redex_id: String,
}

#[derive(Deserialize)]
struct InterruptBody {
    op: String,
    payload: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionReply {
    session_id: String,
    state: StateView,
}

#[derive(Serialize)]
struct StateReply {
    state: StateView,
}

#[derive(Serialize)]
struct UndoReply {
    undone: bool,
    state: StateView,
}

#[derive(Serialize)]
struct LogReply {
    actions: Vec<Action>,
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn create(
    State(app): State<AppState>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionReply>), ApiError> {
    let Json(body) = body?;
    app.sweep();
    let id = app.fresh_id();
    let session = Session::create(id.clone(), &body.source)
        .map_err(|mut ds| {
            let first = ds.first().cloned().unwrap_or_else(|| Diagnostic::new("parse", "empty program"));
            if ds.len() <= 1 {
                ds.clear();
            }
            ApiError { error: first, diagnostics: ds }
        })?
        .with_history_limit(app.0.config.history_limit);
    let state = session.view();
    let slot = Arc::new(tokio::sync::Mutex::new(Entry { session, last_used: Instant::now() }));
    app.0.sessions.lock().expect("session table").insert(id.clone(), slot);
    Ok((StatusCode::CREATED, Json(SessionReply { session_id: id, state })))
}

async fn show(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionReply> {
    let slot = app.slot(&id)?;
    let mut e = slot.lock().await;
    e.last_used = Instant::now();
    Ok(Json(SessionReply { session_id: id, state: e.session.view() }))
}

async fn step(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<StepBody>, JsonRejection>,
) -> ApiResult<StateReply> {
    let Json(body) = body?;
    let slot = app.slot(&id)?;
    let mut e = slot.lock().await;
    e.last_used = Instant::now();
    let state = e.session.apply(&body.redex_id).map_err(ApiError::new)?;
    Ok(Json(StateReply { state }))
}

async fn interrupt(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<InterruptBody>, JsonRejection>,
) -> ApiResult<StateReply> {
    let Json(body) = body?;
    let slot = app.slot(&id)?;
    let mut e = slot.lock().await;
    e.last_used = Instant::now();
    let state = e.session.inject(&body.op, &body.payload).map_err(ApiError::new)?;
    Ok(Json(StateReply { state }))
}

async fn undo(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<UndoReply> {
    let slot = app.slot(&id)?;
    let mut e = slot.lock().await;
    e.last_used = Instant::now();
    let undone = e.session.undo();
    Ok(Json(UndoReply { undone, state: e.session.view() }))
}

async fn log(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<LogReply> {
    let slot = app.slot(&id)?;
    let mut e = slot.lock().await;
    e.last_used = Instant::now();
    Ok(Json(LogReply { actions: e.session.log() }))
}

async fn remove(State(app): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    app.slot(&id)?;
    app.0.sessions.lock().expect("session table").remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

pub fn router_with(app: AppState) -> Router {
    let static_dir = app.0.config.static_dir.clone();
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(show).delete(remove))
        .route("/api/sessions/{id}/step", post(step))
        .route("/api/sessions/{id}/interrupt", post(interrupt))
        .route("/api/sessions/{id}/undo", post(undo))
        .route("/api/sessions/{id}/log", get(log))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub fn router(config: ServerConfig) -> Router {
    router_with(AppState::new(config))
}

/// Serves on `127.0.0.1:port` until interrupted.
pub fn serve_blocking(port: u16, config: ServerConfig, err: &mut dyn Write) -> i32 {
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "cannot start runtime: {e}");
            return EXIT_ERROR;
        }
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind(("127.0.0.1", port)).await {
            Ok(l) => l,
            Err(e) => {
                let _ = writeln!(err, "cannot listen on port {port}: {e}");
                return EXIT_SERVE;
            }
        };
        let _ = writeln!(err, "listening on http://127.0.0.1:{port}");
        match axum::serve(listener, router(config)).await {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "server error: {e}");
                EXIT_SERVE
            }
        }
    })
}
