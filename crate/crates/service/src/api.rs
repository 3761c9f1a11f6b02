//! JSON-over-HTTP interface.
//!
//! | method | path                          | body                                   |
//! |--------|-------------------------------|----------------------------------------|
//! | GET    | `/healthz`                    |                                        |
//! | POST   | `/sessions`                   | scenario document                      |
//! | GET    | `/sessions`                   |                                        |
//! | GET    | `/sessions/{id}/state`        |                                        |
//! | GET    | `/sessions/{id}/history`      |                                        |
//! | POST   | `/sessions/{id}/events`       | `{"entity","value"}` or `{"advance_ms"}` |
//! | POST   | `/sessions/{id}/explanations` | `{"device","foil","kind","config"}`    |
//!
//! Errors are `{"code", "message", "violations"}` with status 400 for malformed
//! input, 404 for unknown sessions and 422 when a well-formed question has no answer.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cfexplain::{
    explain, ConfigLayer, EngineError, Event, ExplainError, ExplanationKind, ExplanationRequest, HistoryEntry,
    Settings, TimedEvent, Violation, World,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{SessionStore, StoreError};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub settings: Arc<Settings>,
}

impl AppState {
    pub fn new(store: SessionStore, settings: Settings) -> Self {
        AppState { store: Arc::new(store), settings: Arc::new(settings) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/history", get(session_history))
        .route("/sessions/{id}/events", post(inject_event))
        .route("/sessions/{id}/explanations", post(request_explanation))
        .with_state(state)
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub code: String,
    pub message: String,
    pub violations: Vec<Violation>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), violations: Vec::new() }
    }

    fn bad_body(e: serde_json::Error) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid-request", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::CascadeOverflow { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<ExplainError> for ApiError {
    fn from(e: ExplainError) -> Self {
        let status = match &e {
            ExplainError::NoExplanandum { .. }
            | ExplainError::UnachievableFoil { .. }
            | ExplainError::NoCandidates { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ExplainError::Engine(inner) => return inner.clone().into(),
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not-found", e.to_string()),
            StoreError::Scenario(s) => ApiError {
                status: StatusCode::BAD_REQUEST,
                code: s.code().to_string(),
                message: s.to_string(),
                violations: s.violations().to_vec(),
            },
            StoreError::Engine(inner) => inner.into(),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &str) -> ApiResult<T> {
    serde_json::from_str(body).map_err(ApiError::bad_body)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Debug, Serialize)]
pub struct SessionState {
    pub id: String,
    pub created_at: i64,
    pub clock: i64,
    pub steps: usize,
    pub state: BTreeMap<String, String>,
    pub config: Settings,
}

async fn create_session(State(app): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<SessionState>)> {
    let store = app.store.clone();
    let session = tokio::task::spawn_blocking(move || store.create(&body))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let snap = session.snapshot();
    Ok((
        StatusCode::CREATED,
        Json(SessionState {
            id: snap.id,
            created_at: snap.created_at,
            clock: snap.state.clock,
            steps: snap.steps,
            state: snap.state.values,
            config: (*app.settings).clone(),
        }),
    ))
}

async fn list_sessions(State(app): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({"sessions": app.store.ids(), "config": &*app.settings}))
}

async fn session_state(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionState>> {
    let snap = app.store.get(&id)?.snapshot();
    Ok(Json(SessionState {
        id: snap.id,
        created_at: snap.created_at,
        clock: snap.state.clock,
        steps: snap.steps,
        state: snap.state.values,
        config: (*app.settings).clone(),
    }))
}

#[derive(Debug, Serialize)]
pub struct SessionHistory {
    pub id: String,
    pub history: Vec<HistoryEntry>,
    pub events: Vec<TimedEvent>,
    pub config: Settings,
}

async fn session_history(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionHistory>> {
    let snap = app.store.get(&id)?.snapshot();
    Ok(Json(SessionHistory {
        id: snap.id,
        history: snap.history,
        events: snap.events,
        config: (*app.settings).clone(),
    }))
}

async fn inject_event(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<serde_json::Value>> {
    let event: Event = parse_body(&body)?;
    let session = app.store.get(&id)?;
    // The log write syncs to disk, so keep it off the async workers.
    let record = tokio::task::spawn_blocking(move || session.inject(event))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let mut value = serde_json::to_value(record).expect("record serializes");
    value["config"] = serde_json::to_value(&*app.settings).expect("settings serialize");
    Ok(Json(value))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationBody {
    pub device: String,
    pub foil: String,
    #[serde(default)]
    pub kind: ExplanationKind,
    /// Per-request overrides on top of the server settings.
    #[serde(default)]
    pub config: ConfigLayer,
}

async fn request_explanation(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<cfexplain::ExplanationReport>> {
    let body: ExplanationBody = parse_body(&body)?;
    let settings = body.config.apply(&app.settings)?;
    let session = app.store.get(&id)?;
    let (scenario, events, clock) = session.world_inputs();
    let req = ExplanationRequest::new(body.device, body.foil, body.kind);
    let report = tokio::task::spawn_blocking(move || -> ApiResult<_> {
        let world = World::with_events(&scenario, settings.engine, events, clock)?;
        Ok(explain(&world, &req, &settings)?)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(report))
}
