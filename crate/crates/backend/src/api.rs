//! HTTP API consumed by the health-center dashboard.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;

use securetrack_core::NodeId;

use crate::db::Database;
use crate::error::BackendError;
use crate::model::{CaseReport, DecryptedContact, StudentRecord};
use crate::notifier::Notifier;

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

pub struct AppState {
    pub db: Mutex<Database>,
    pub notifier: Notifier,
    /// Snapshot written after every mutation when set.
    pub db_path: Option<PathBuf>,
    /// Directory holding `<node>.strk` dumps served to the dashboard.
    pub device_dir: Option<PathBuf>,
    pub clock: Clock,
}

impl AppState {
    pub fn new(db: Database, notifier: Notifier) -> Self {
        AppState {
            db: Mutex::new(db),
            notifier,
            db_path: None,
            device_dir: None,
            clock: system_clock(),
        }
    }

    fn persist(&self, db: &Database) -> Result<(), BackendError> {
        match &self.db_path {
            Some(path) => db.save(path),
            None => Ok(()),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/students", get(list_students).post(create_student))
        .route("/cases", get(list_cases).post(create_case))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/exposures", get(get_exposures))
        .route("/cases/{id}/notify", post(notify_case))
        .route("/devices/{node_id}/store", get(device_store))
        .with_state(state)
}

pub struct ApiError(BackendError);

impl From<BackendError> for ApiError {
    fn from(e: BackendError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        use BackendError::*;
        let status = match &self.0 {
            UnknownStudent(_) | UnknownCase(_) => StatusCode::NOT_FOUND,
            DuplicateStudent(_) | DuplicateNode(_) | CaseNotDecrypted(_) => StatusCode::CONFLICT,
            OwnerMismatch { .. } | Format(_) | Crypto(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Invalid(_) => StatusCode::BAD_REQUEST,
            Snapshot { .. } | Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = json!({ "error": self.0.kind(), "message": self.0.to_string() });
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Node ids above 2^53 do not survive a JavaScript number, so strings are
/// accepted too.
#[derive(Deserialize)]
#[serde(untagged)]
enum NodeIdInput {
    Number(u64),
    Text(String),
}

impl NodeIdInput {
    fn resolve(self) -> Result<NodeId, BackendError> {
        let parsed = match self {
            NodeIdInput::Number(n) => NodeId::new(n),
            NodeIdInput::Text(s) => s.trim().parse(),
        };
        parsed.map_err(|e| BackendError::Invalid(format!("node_id: {e}")))
    }
}

#[derive(Deserialize)]
struct NewStudent {
    student_id: String,
    contact_info: String,
    node_id: NodeIdInput,
}

async fn list_students(State(st): State<Arc<AppState>>) -> Json<Vec<StudentRecord>> {
    Json(st.db.lock().await.students().cloned().collect())
}

async fn create_student(
    State(st): State<Arc<AppState>>,
    body: Result<Json<NewStudent>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<(StatusCode, Json<StudentRecord>)> {
    let Json(req) = body.map_err(|e| BackendError::Invalid(e.body_text()))?;
    let node = req.node_id.resolve()?;
    let mut db = st.db.lock().await;
    let record = db.register_student(&req.student_id, &req.contact_info, node)?;
    st.persist(&db)?;
    tracing::info!(student = %record.student_id, node = %record.node_id, "student registered");
    Ok((StatusCode::CREATED, Json(record)))
}

#[derive(Deserialize)]
struct NewCase {
    student_id: String,
    reported_at: Option<u64>,
}

#[derive(Serialize)]
struct CaseView {
    case: CaseReport,
    contacts: Vec<DecryptedContact>,
}

async fn list_cases(State(st): State<Arc<AppState>>) -> Json<Vec<CaseReport>> {
    Json(st.db.lock().await.cases().cloned().collect())
}

async fn create_case(
    State(st): State<Arc<AppState>>,
    query: Result<Query<NewCase>, axum::extract::rejection::QueryRejection>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<CaseView>)> {
    let Query(req) = query.map_err(|e| BackendError::Invalid(e.body_text()))?;
    let reported_at = req.reported_at.unwrap_or_else(|| (st.clock)());
    let mut db = st.db.lock().await;
    let (case, contacts) = db.register_case(&req.student_id, &body, reported_at)?;
    st.persist(&db)?;
    tracing::info!(case = case.case_id, contacts = contacts.len(), "case registered");
    Ok((StatusCode::CREATED, Json(CaseView { case, contacts })))
}

async fn get_case(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Json<CaseView>> {
    let db = st.db.lock().await;
    Ok(Json(CaseView {
        case: db.case(id)?.clone(),
        contacts: db.case_contacts(id)?.to_vec(),
    }))
}

async fn get_exposures(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Response> {
    let mut db = st.db.lock().await;
    let exposures = db.exposures(id)?;
    st.persist(&db)?;
    Ok(Json(exposures).into_response())
}

async fn notify_case(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Response> {
    let now = (st.clock)();
    let mut db = st.db.lock().await;
    let outcome = db.notify(id, &st.notifier, now).await?;
    st.persist(&db)?;
    for f in &outcome.failed {
        tracing::warn!(case = id, recipient = %f.recipient_student_id, "notice failed: {}", f.message);
    }
    let status = if outcome.failed.is_empty() {
        StatusCode::OK
    } else {
        StatusCode::BAD_GATEWAY
    };
    Ok((status, Json(outcome)).into_response())
}

async fn device_store(State(st): State<Arc<AppState>>, Path(node): Path<String>) -> ApiResult<Response> {
    let node: NodeId = node
        .parse()
        .map_err(|e| BackendError::Invalid(format!("node_id: {e}")))?;
    let Some(dir) = &st.device_dir else {
        return Err(BackendError::Invalid("no device directory configured".into()).into());
    };
    match tokio::fs::read(dir.join(format!("{node}.strk"))).await {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok((
            StatusCode::NOT_FOUND,
            Json(json!({ "error": "UnknownDevice", "message": format!("no dump for node {node}") })),
        )
            .into_response()),
        Err(e) => Err(BackendError::Io(e).into()),
    }
}
