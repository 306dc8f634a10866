use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use uuid::Uuid;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("invalid session config: {0}")]
    InvalidConfig(dcalm::Error),
    #[error("session {0} has no pending batch")]
    NothingPending(Uuid),
    #[error("submission is missing pending ids {0:?}")]
    Partial(Vec<u64>),
    #[error("ids {0:?} are not in the pending batch")]
    UnknownIds(Vec<String>),
    #[error("unknown class {class:?} for instance {id}")]
    InvalidClass { id: u64, class: String },
    #[error("event log {path}: {message}")]
    Log { path: String, message: String },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Core(#[from] dcalm::Error),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidConfig(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::NothingPending(_) => StatusCode::CONFLICT,
            ServiceError::Partial(_) | ServiceError::UnknownIds(_) | ServiceError::InvalidClass { .. } => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::Log { .. } | ServiceError::Internal(_) | ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}
