//! Local HTTP JSON API over models, verdict reports and simulation sessions.
//!
//! | method | path                        | body                                   |
//! |--------|-----------------------------|----------------------------------------|
//! | GET    | `/models`                   |                                        |
//! | GET    | `/models/{m}`               |                                        |
//! | POST   | `/sessions`                 | `{"model": m, "view": "sda3"\|"ada3"}` |
//! | GET    | `/sessions/{id}`            |                                        |
//! | POST   | `/sessions/{id}/step`       | `{"transition": label-or-id}`          |
//! | POST   | `/sessions/{id}/undo`       |                                        |
//! | POST   | `/sessions/{id}/reset`      |                                        |
//! | POST   | `/sessions/{id}/trace`      | `{"verdict": id}` or `{"actions": [..]}` |
//! | POST   | `/sessions/{id}/advance`    |                                        |
//! | DELETE | `/sessions/{id}`            |                                        |
//!
//! Session responses carry `{"session", "model", "snapshot"}`; step-like
//! calls add `"step": {"action", "label", "focus"}`. Errors are
//! `{"error": kind, "message": text}` with 404 for unknown ids, 409 for
//! requests the current state rejects and 400 for malformed bodies.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;
use tower_http::services::ServeDir;

use imds_core::automata::{automata_json, AutomataKind};
use imds_core::{analyze, build_lts, parse, Limits, Session, SimError, StepOutcome, SystemModel, Trace};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse {
        path: PathBuf,
        source: imds_core::ParseError,
    },
    #[error("{path}: {source}")]
    Limits {
        path: PathBuf,
        source: imds_core::LimitExceeded,
    },
}

/// A loaded model with its precomputed JSON views.
pub struct ModelEntry {
    pub id: String,
    pub model: Arc<SystemModel>,
    summary: Value,
    detail: Value,
    report: imds_core::Report,
}

impl ModelEntry {
    pub fn new(id: &str, model: SystemModel, limits: Limits) -> Result<Self, imds_core::LimitExceeded> {
        let lts = build_lts(&model, limits)?;
        let report = analyze(&model, &lts);
        let summary = json!({
            "id": id,
            "name": model.name().as_str(),
            "servers": model.servers().len(),
            "agents": model.agents().len(),
            "actions": model.actions().len(),
            "lts": {"nodes": lts.node_count(), "edges": lts.edge_count()},
        });
        let detail = json!({
            "schema_version": 1,
            "id": id,
            "model": {
                "name": model.name().as_str(),
                "servers": model.servers().iter().map(|s| json!({
                    "name": s.name.as_str(),
                    "values": s.values.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
                    "services": s.services.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
                "agents": model.agents().iter().map(|a| a.as_str()).collect::<Vec<_>>(),
                "actions": (0..model.actions().len()).map(|k| json!({
                    "id": k,
                    "label": model.action_label(k),
                    "text": model.action_text(k),
                })).collect::<Vec<_>>(),
                "initial": model.configuration_text(&model.initial_configuration()),
            },
            "automata": {
                "sda3": automata_json(&model, AutomataKind::Sda3),
                "ada3": automata_json(&model, AutomataKind::Ada3),
            },
            "report": report.to_json(&model),
        });
        Ok(ModelEntry {
            id: id.to_string(),
            model: Arc::new(model),
            summary,
            detail,
            report,
        })
    }
}

/// Loads every top-level `*.imds` file of `dir`; the model id is the file stem.
pub fn load_models(dir: &Path, limits: Limits) -> Result<Vec<ModelEntry>, LoadError> {
    let read = |path: &Path| std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    });
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| LoadError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "imds"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|path| {
            let text = read(path)?;
            let (model, _) = parse(&text).map_err(|source| LoadError::Parse {
                path: path.clone(),
                source,
            })?;
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
            ModelEntry::new(id, model, limits).map_err(|source| LoadError::Limits {
                path: path.clone(),
                source,
            })
        })
        .collect()
}

struct SessionEntry {
    model: String,
    session: Session,
}

pub struct AppState {
    models: BTreeMap<String, ModelEntry>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(models: Vec<ModelEntry>) -> Arc<Self> {
        Arc::new(AppState {
            models: models.into_iter().map(|m| (m.id.clone(), m)).collect(),
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
    }
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            kind: "NotFound",
            message,
        }
    }

    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "BadRequest",
            message,
        }
    }

    fn conflict(kind: &'static str, message: String) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            kind,
            message,
        }
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        let kind = match e {
            SimError::UnknownTransition(_) => return ApiError::bad_request(e.to_string()),
            SimError::TransitionNotEnabled(_) => "TransitionNotEnabled",
            SimError::NothingToUndo => "NothingToUndo",
            SimError::TraceMismatch { .. } => "TraceMismatch",
            SimError::NoPinnedTrace => "NoPinnedTrace",
            SimError::PinExhausted => "PinExhausted",
        };
        ApiError::conflict(kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    let bytes: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

fn session_json(id: &str, entry: &SessionEntry, step: Option<StepOutcome>) -> Value {
    let mut v = json!({
        "session": id,
        "model": entry.model,
        "snapshot": entry.session.snapshot(),
    });
    if let Some(step) = step {
        v["step"] = json!(step);
    }
    v
}

async fn list_models(State(state): State<Arc<AppState>>) -> Json<Value> {
    let models: Vec<&Value> = state.models.values().map(|m| &m.summary).collect();
    Json(json!({"schema_version": 1, "models": models}))
}

async fn get_model(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let entry = state
        .models
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown model `{id}`")))?;
    Ok(Json(entry.detail.clone()).into_response())
}

#[derive(Deserialize)]
struct CreateSession {
    model: String,
    #[serde(default = "default_view")]
    view: String,
}

fn default_view() -> String {
    "sda3".into()
}

async fn create_session(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult {
    let req: CreateSession = body(&bytes)?;
    let view: AutomataKind = req.view.parse().map_err(ApiError::bad_request)?;
    let model = state
        .models
        .get(&req.model)
        .ok_or_else(|| ApiError::not_found(format!("unknown model `{}`", req.model)))?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let entry = SessionEntry {
        model: req.model.clone(),
        session: Session::new(model.model.clone(), view),
    };
    let response = session_json(&id, &entry, None);
    state
        .sessions
        .write()
        .expect("session table lock")
        .insert(id, Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(response)).into_response())
}

async fn get_session(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let session = state.session(&id)?;
    let entry = session.lock().expect("session lock");
    Ok(Json(session_json(&id, &entry, None)).into_response())
}

async fn delete_session(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    state
        .sessions
        .write()
        .expect("session table lock")
        .remove(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

#[derive(Deserialize)]
struct StepRequest {
    transition: Value,
}

/// Runs `op` under the session's lock and returns the updated session.
fn mutate(
    state: &AppState,
    id: &str,
    op: impl FnOnce(&mut SessionEntry) -> Result<Option<StepOutcome>, ApiError>,
) -> ApiResult {
    let session = state.session(id)?;
    let mut entry = session.lock().expect("session lock");
    let step = op(&mut entry)?;
    Ok(Json(session_json(id, &entry, step)).into_response())
}

async fn step(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: StepRequest = body(&bytes)?;
    let label = match req.transition {
        Value::String(s) => s,
        Value::Number(n) => n.to_string(),
        other => return Err(ApiError::bad_request(format!("transition must be a label or id, got {other}"))),
    };
    mutate(&state, &id, |e| Ok(Some(e.session.step_label(&label)?)))
}

async fn undo(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    mutate(&state, &id, |e| {
        e.session.undo()?;
        Ok(None)
    })
}

async fn reset(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    mutate(&state, &id, |e| {
        e.session.reset();
        Ok(None)
    })
}

async fn advance(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    mutate(&state, &id, |e| Ok(Some(e.session.advance()?)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceRequest {
    verdict: Option<String>,
    actions: Option<Vec<Value>>,
}

async fn load_trace(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: TraceRequest = body(&bytes)?;
    let session = state.session(&id)?;
    let mut entry = session.lock().expect("session lock");
    let model_entry = &state.models[&entry.model];
    let model = &model_entry.model;
    let trace = match (req.verdict, req.actions) {
        (Some(verdict), None) => {
            let v = model_entry
                .report
                .verdict(model, &verdict)
                .ok_or_else(|| ApiError::not_found(format!("unknown verdict `{verdict}`")))?;
            v.witness
                .ok_or_else(|| ApiError::conflict("NoWitness", format!("verdict `{verdict}` has no witness")))?
        }
        (None, Some(actions)) => {
            let mut ids = Vec::with_capacity(actions.len());
            for a in actions {
                let text = match a {
                    Value::String(s) => s,
                    Value::Number(n) => n.to_string(),
                    other => return Err(ApiError::bad_request(format!("bad action {other}"))),
                };
                ids.push(
                    model
                        .resolve_action(&text)
                        .ok_or_else(|| ApiError::bad_request(format!("unknown action `{text}`")))?,
                );
            }
            Trace::new(ids)
        }
        _ => return Err(ApiError::bad_request("give exactly one of `verdict` or `actions`".into())),
    };
    entry.session.load_trace(trace)?;
    Ok(Json(session_json(&id, &entry, None)).into_response())
}

/// The API router; with `ui` set, files under that directory are served at `/`.
pub fn router(state: Arc<AppState>, ui: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/models", get(list_models))
        .route("/models/{m}", get(get_model))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/reset", post(reset))
        .route("/sessions/{id}/trace", post(load_trace))
        .route("/sessions/{id}/advance", post(advance))
        .with_state(state);
    match ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr, ui: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state, ui)).await
}
