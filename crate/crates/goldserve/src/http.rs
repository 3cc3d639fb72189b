use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{any, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use silverqa_core::gold::{AnnotationResponse, AnnotationTask, KappaResult, TaskStatus, Verdict};
use tower_http::services::ServeDir;

use crate::store::{GoldStore, StoreError, DEFAULT_BATCH};

/// Shared server state. Reads run concurrently; submissions are serialized
/// by the write lock, which also orders the response log.
#[derive(Clone)]
pub struct AppState {
    store: Arc<RwLock<GoldStore>>,
}

impl AppState {
    pub fn new(store: GoldStore) -> Self {
        Self {
            store: Arc::new(RwLock::new(store)),
        }
    }

    pub fn with_store<T>(&self, f: impl FnOnce(&GoldStore) -> T) -> T {
        f(&self.store.read().expect("store lock"))
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(m) => Self::new(StatusCode::NOT_FOUND, "not_found", m),
            StoreError::Invalid(m) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", m),
            StoreError::Storage(e) => {
                log::error!("storage failure: {e}");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskList {
    pub annotator: String,
    pub tasks: Vec<AnnotationTask>,
    /// Open tasks left for this annotator, including the ones returned.
    pub remaining: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitBody {
    pub annotator_id: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SubmitReply {
    response: AnnotationResponse,
    status: TaskStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IaaReply {
    a: String,
    b: String,
    common_tasks: usize,
    #[serde(flatten)]
    result: KappaResult,
}

type Params = HashMap<String, String>;

fn required<'a>(q: &'a Params, key: &str) -> Result<&'a str, ApiError> {
    match q.get(key).map(|s| s.trim()) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(ApiError::bad_request(format!("missing query parameter `{key}`"))),
    }
}

fn query(q: Result<Query<Params>, axum::extract::rejection::QueryRejection>) -> Result<Params, ApiError> {
    q.map(|Query(p)| p)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn list_tasks(
    State(st): State<AppState>,
    q: Result<Query<Params>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<TaskList>, ApiError> {
    let q = query(q)?;
    let annotator = required(&q, "annotator")?.to_string();
    let limit = match q.get("limit") {
        None => DEFAULT_BATCH,
        Some(s) => s
            .parse::<usize>()
            .map_err(|_| ApiError::bad_request(format!("limit `{s}` is not a count")))?,
    };
    let (tasks, remaining) = st.with_store(|s| s.next_tasks(&annotator, limit));
    Ok(Json(TaskList {
        annotator,
        tasks,
        remaining,
    }))
}

async fn get_task(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<AnnotationTask>, ApiError> {
    Ok(Json(st.with_store(|s| s.task(&id))?))
}

async fn submit(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SubmitReply>, ApiError> {
    let body: SubmitBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("malformed response body: {e}")))?;
    if body.annotator_id.trim().is_empty() {
        return Err(ApiError::bad_request("annotator_id is empty"));
    }
    let mut store = st.store.write().expect("store lock");
    let response = store.submit(&id, &body.annotator_id, body.verdict, chrono::Utc::now())?;
    let status = store.status(&id);
    log::info!("task {id}: response from {}", response.annotator_id);
    Ok(Json(SubmitReply { response, status }))
}

async fn export_gold(State(st): State<AppState>) -> Result<Response, ApiError> {
    let gold = st.with_store(|s| s.write_gold_snapshot())?;
    Ok(Json(gold).into_response())
}

async fn iaa(
    State(st): State<AppState>,
    q: Result<Query<Params>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<IaaReply>, ApiError> {
    let q = query(q)?;
    let (a, b) = (required(&q, "a")?, required(&q, "b")?);
    let (result, common_tasks) = st.with_store(|s| s.iaa(a, b))?;
    Ok(Json(IaaReply {
        a: a.to_string(),
        b: b.to_string(),
        common_tasks,
        result,
    }))
}

async fn api_not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// API routes, plus static files from `static_dir` for everything else.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .route("/api/tasks", get(list_tasks))
        .route("/api/task/{id}", get(get_task))
        .route("/api/task/{id}/response", post(submit))
        .route("/api/export/gold", get(export_gold))
        .route("/api/iaa", get(iaa))
        .route("/api/{*rest}", any(api_not_found))
        .with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(api_not_found),
    }
}

/// Binds `addr` and serves until ctrl-c. `on_bound` sees the actual address,
/// which matters when port 0 was requested.
pub async fn serve(
    addr: SocketAddr,
    state: AppState,
    static_dir: Option<PathBuf>,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Blocking wrapper around [`serve`] on its own multi-threaded runtime.
pub fn serve_blocking(
    addr: SocketAddr,
    state: AppState,
    static_dir: Option<PathBuf>,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(addr, state, static_dir, on_bound))
}
