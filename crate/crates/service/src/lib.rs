//! Annotation service: active-learning sessions answered by a human oracle,
//! exposed over HTTP.
//!
//! * `POST /sessions` starts a session and returns the bootstrap batch.
//! * `POST /sessions/{id}/labels` answers the pending batch with a
//!   `{"<instance id>": "<class name>"}` object.
//! * `GET /sessions/{id}` returns a snapshot of the session.
//! * `GET /sessions/{id}/report` returns the latest distribution report.
//!
//! Sessions are persisted as append-only JSONL event logs and replayed on
//! startup.

mod error;
mod http;
mod session;

pub use error::ServiceError;
pub use http::{router, serve};
pub use session::{
    CreateResponse, PendingItem, RoundSummary, SessionConfig, SessionManager, SessionSnapshot,
    SessionState, SubmitResponse, TestSummary,
};
