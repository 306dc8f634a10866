use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::session::{CreateResponse, SessionConfig, SessionManager, SessionSnapshot, SubmitResponse};
use crate::ServiceError;

type Shared = Arc<SessionManager>;

/// Routes of the annotation service.
pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(status))
        .route("/sessions/{id}/labels", post(submit))
        .route("/sessions/{id}/report", get(report))
        .with_state(manager)
}

/// Serves the router on `addr` until the process is stopped.
pub async fn serve(manager: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(manager)).await
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn create(
    State(manager): State<Shared>,
    Json(config): Json<SessionConfig>,
) -> Result<(StatusCode, Json<CreateResponse>), ServiceError> {
    let created = blocking(move || manager.create(config)).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn submit(
    State(manager): State<Shared>,
    Path(id): Path<String>,
    Json(answers): Json<BTreeMap<String, String>>,
) -> Result<Json<SubmitResponse>, ServiceError> {
    Ok(Json(blocking(move || manager.submit(&id, &answers)).await?))
}

async fn status(
    State(manager): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<SessionSnapshot>, ServiceError> {
    Ok(Json(manager.status(&id)?))
}

async fn report(
    State(manager): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ServiceError> {
    let report = manager.report(&id)?;
    Ok(Json(serde_json::to_value(report).expect("report serializes")))
}
