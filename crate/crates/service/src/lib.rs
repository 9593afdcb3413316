//! Session service for interactive narratives: an append-only event log
//! per deployment, a synchronous [`Service`] API and its HTTP front end.

mod backend_server;
mod error;
mod http;
mod service;
pub mod store;

pub use backend_server::{backend_router, DEFAULT_DEADLINE_MS};
pub use error::{ErrorResponse, ServiceError};
pub use http::{router, SCHEMA};
pub use service::{
    AnswerResponse, Health, HistoryView, NarrativeView, PersonalizeResponse, QuestionView, SentenceView, Service,
    SessionView,
};

/// Serves `app` on `listener` until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, app: axum::Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}
