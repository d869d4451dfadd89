//! HTTP routes over a [`ReviewStore`].

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::store::{LabelSet, ReviewStore, StoreError};

impl IntoResponse for StoreError {
    fn into_response(self) -> Response {
        let status = match &self {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::BadRequest(_) => StatusCode::BAD_REQUEST,
            StoreError::Conflict { .. } => StatusCode::CONFLICT,
            StoreError::Internal(m) => {
                log::error!("{m}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let mut body = json!({ "error": self.to_string() });
        if let StoreError::Conflict { current, .. } = self {
            body["revision"] = json!(current);
        }
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<ReviewStore>;

/// Runs store work off the async executor; the store does blocking file IO.
async fn blocking<T: Send + 'static>(
    store: &Shared,
    f: impl FnOnce(&ReviewStore) -> Result<T, StoreError> + Send + 'static,
) -> Result<T, StoreError> {
    let store = Arc::clone(store);
    tokio::task::spawn_blocking(move || f(&store)).await.map_err(|e| StoreError::Internal(e.to_string()))?
}

async fn manifest(State(store): State<Shared>) -> impl IntoResponse {
    Json(store.manifest_view())
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("bmp") => "image/bmp",
        Some("tif" | "tiff") => "image/tiff",
        _ => "application/octet-stream",
    }
}

async fn image(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, StoreError> {
    let path = store.image_path(&id)?;
    let bytes = tokio::fs::read(&path).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => StoreError::NotFound(format!("{id} (file {} missing)", path.display())),
        _ => StoreError::Internal(format!("{}: {e}", path.display())),
    })?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

async fn get_labels(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<LabelSet>, StoreError> {
    blocking(&store, move |s| s.labels(&id)).await.map(Json)
}

async fn put_labels(State(store): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Json<LabelSet>, StoreError> {
    let set: LabelSet = serde_json::from_slice(&body).map_err(|e| StoreError::BadRequest(format!("malformed body: {e}")))?;
    blocking(&store, move |s| s.save(&id, set)).await.map(Json)
}

async fn complete(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, StoreError> {
    blocking(&store, move |s| s.complete(&id)).await.map(|e| Json(e).into_response())
}

async fn progress(State(store): State<Shared>) -> impl IntoResponse {
    Json(store.progress())
}

const PLACEHOLDER: &str = "<!doctype html><meta charset=utf-8><title>label review</title>\
<p>No review UI bundle configured. The API lives under <code>/api/</code>: \
<code>manifest</code>, <code>image/{id}</code>, <code>labels/{id}</code>, <code>progress</code>.</p>";

pub fn router(store: Arc<ReviewStore>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/manifest", get(manifest))
        .route("/api/image/{id}", get(image))
        .route("/api/labels/{id}", get(get_labels).put(put_labels))
        .route("/api/labels/{id}/complete", post(complete))
        .route("/api/progress", get(progress))
        .with_state(store);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub root: PathBuf,
    pub addr: SocketAddr,
    pub ui_dir: Option<PathBuf>,
    pub proposal_dir: Option<PathBuf>,
}

/// Opens the dataset and serves until the process is stopped.
pub async fn serve(opts: ServeOptions) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let store = Arc::new(ReviewStore::open(&opts.root, opts.proposal_dir)?);
    let listener = tokio::net::TcpListener::bind(opts.addr).await?;
    log::info!("serving {} on http://{}", opts.root.display(), listener.local_addr()?);
    axum::serve(listener, router(store, opts.ui_dir)).await?;
    Ok(())
}
