//! HTTP/JSON front end for [`SessionStore`].
//!
//! | method | path                    | body                              |
//! |--------|-------------------------|-----------------------------------|
//! | POST   | `/sessions`             | `{"source_tokens": [..]}`         |
//! | GET    | `/sessions`             |                                   |
//! | GET    | `/sessions/{id}`        |                                   |
//! | POST   | `/sessions/{id}/read`   |                                   |
//! | POST   | `/sessions/{id}/write`  | `{"token": ".."}`                 |
//! | POST   | `/sessions/{id}/finish` |                                   |
//! | POST   | `/ratings`              | `{"item_id","rater_id","score"}`  |
//! | GET    | `/ratings/ap`           | `?threshold=3`                    |
//! | GET    | `/export`               |                                   |
//!
//! Protocol violations and malformed bodies are 400, unknown sessions 404,
//! illegal state transitions 409.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use monoeval_core::annotation::DEFAULT_ACCEPT_THRESHOLD;
use monoeval_core::stream::serialize_stream_log;
use monoeval_core::TokenSeq;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::error::{ErrorKind, StoreError};
use crate::store::SessionStore;

/// Name of the reference file inside the export archive.
pub const EXPORT_REFERENCES: &str = "references.txt";
/// Name of the stream-log file inside the export archive.
pub const EXPORT_LOGS: &str = "logs.jsonl";

pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
    unfinished: Option<Vec<String>>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "protocol",
            message: message.into(),
            unfinished: None,
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, kind) = match e.kind() {
            ErrorKind::Protocol => (StatusCode::BAD_REQUEST, "protocol"),
            ErrorKind::NotFound => (StatusCode::NOT_FOUND, "not_found"),
            ErrorKind::State => (StatusCode::CONFLICT, "state"),
            ErrorKind::Internal => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %e, "store failure");
        }
        let unfinished = match &e {
            StoreError::Export(x) => Some(x.unfinished.clone()),
            _ => None,
        };
        ApiError {
            status,
            kind,
            message: e.to_string(),
            unfinished,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind, "message": self.message });
        if let Some(ids) = self.unfinished {
            body["unfinished"] = json!(ids);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// Runs a blocking store call off the async executor.
async fn blocking<T, F>(store: &Arc<SessionStore>, f: F) -> Result<T, ApiError>
where
    F: FnOnce(&SessionStore) -> Result<T, StoreError> + Send + 'static,
    T: Send + 'static,
{
    let store = Arc::clone(store);
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            kind: "internal",
            message: e.to_string(),
            unfinished: None,
        })?
        .map_err(ApiError::from)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    source_tokens: TokenSeq,
}

async fn create(
    State(store): State<Arc<SessionStore>>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let view = blocking(&store, move |s| s.create(body.source_tokens)).await?;
    Ok(Json(json!({ "session_id": view.session_id, "exposed": view.exposed })).into_response())
}

async fn list(State(store): State<Arc<SessionStore>>) -> ApiResult {
    let views = blocking(&store, |s| Ok(s.list())).await?;
    let summary: Vec<Value> = views
        .into_iter()
        .map(|v| {
            json!({
                "session_id": v.session_id,
                "state": v.state,
                "reads_done": v.reads_done,
                "source_len": v.source_len,
            })
        })
        .collect();
    Ok(Json(json!({ "sessions": summary })).into_response())
}

async fn state(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult {
    let view = blocking(&store, move |s| s.view(&id)).await?;
    Ok(Json(view).into_response())
}

async fn read(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult {
    let token = blocking(&store, move |s| s.read(&id)).await?;
    Ok(Json(json!({ "exposed_token": token })).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WriteBody {
    token: String,
}

async fn write(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Result<Json<WriteBody>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let stream = blocking(&store, move |s| s.write(&id, &body.token)).await?;
    Ok(Json(json!({ "target_stream": stream })).into_response())
}

async fn finish(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult {
    let log = blocking(&store, move |s| s.finish(&id)).await?;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        serialize_stream_log(&log),
    )
        .into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatingBody {
    item_id: String,
    rater_id: String,
    score: i64,
}

async fn rate(
    State(store): State<Arc<SessionStore>>,
    body: Result<Json<RatingBody>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let record = blocking(&store, move |s| s.rate(&body.item_id, &body.rater_id, body.score)).await?;
    Ok(Json(record).into_response())
}

#[derive(Deserialize)]
struct ApQuery {
    threshold: Option<i64>,
}

async fn ap(
    State(store): State<Arc<SessionStore>>,
    query: Result<Query<ApQuery>, QueryRejection>,
) -> ApiResult {
    let Query(q) = query?;
    let threshold = q.threshold.unwrap_or(DEFAULT_ACCEPT_THRESHOLD);
    let report = blocking(&store, move |s| s.ap(threshold)).await?;
    Ok(Json(report).into_response())
}

async fn export(State(store): State<Arc<SessionStore>>) -> ApiResult {
    let e = blocking(&store, |s| s.export()).await?;
    Ok(Json(json!({
        "files": { EXPORT_REFERENCES: e.references, EXPORT_LOGS: e.logs }
    }))
    .into_response())
}

/// The API router, optionally serving static UI assets for unmatched paths.
pub fn router(store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(state))
        .route("/sessions/{id}/read", post(read))
        .route("/sessions/{id}/write", post(write))
        .route("/sessions/{id}/finish", post(finish))
        .route("/ratings", post(rate))
        .route("/ratings/ap", get(ap))
        .route("/export", get(export))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
