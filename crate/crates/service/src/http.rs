//! The `/v1` JSON API over [`Service`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::ServiceError;
use crate::service::Service;

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        (status, Json(self.0.body())).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

/// Runs a pipeline-bound call off the async executor.
async fn blocking<T, F>(svc: Arc<Service>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ServiceError::Store(format!("worker failed: {e}")))?
        .map_err(ApiError)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    user_id: String,
    image_id: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PostAnswer {
    answer: String,
    request_id: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageBody {
    image_id: String,
    request_id: Option<String>,
}

#[derive(Deserialize)]
struct ChoicesQuery {
    user_id: Option<String>,
}

async fn create_session(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = parse(&body)?;
    let view = blocking(svc, move |s| s.create_session(&req.user_id, &req.image_id)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.get_session(&id)?))
}

async fn show_question(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: ImageBody = parse(&body)?;
    Ok(Json(blocking(svc, move |s| s.show_question(&id, &req.image_id)).await?))
}

async fn post_answer(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: PostAnswer = parse(&body)?;
    Ok(Json(blocking(svc, move |s| s.post_answer(&id, &req.answer, req.request_id.as_deref())).await?))
}

async fn personalize(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: ImageBody = parse(&body)?;
    Ok(Json(
        blocking(svc, move |s| s.personalize(&id, &req.image_id, req.request_id.as_deref())).await?,
    ))
}

async fn narrate(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: ImageBody = parse(&body)?;
    Ok(Json(blocking(svc, move |s| s.narrate(&req.image_id)).await?))
}

async fn choices(State(svc): State<Arc<Service>>, Query(q): Query<ChoicesQuery>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(svc, move |s| s.choices(q.user_id.as_deref())).await?))
}

async fn healthz(State(svc): State<Arc<Service>>) -> impl IntoResponse {
    Json(svc.health())
}

/// JSON Schema of every response body, keyed under `$defs`.
pub const SCHEMA: &str = include_str!("../schema/v1.json");

async fn schema() -> impl IntoResponse {
    ([(axum::http::header::CONTENT_TYPE, "application/schema+json")], SCHEMA)
}

async fn not_found() -> ApiError {
    ApiError(ServiceError::NotFound)
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/question", post(show_question))
        .route("/v1/sessions/{id}/answer", post(post_answer))
        .route("/v1/sessions/{id}/personalize", post(personalize))
        .route("/v1/narrate", post(narrate))
        .route("/v1/choices", get(choices))
        .route("/v1/healthz", get(healthz))
        .route("/v1/schema", get(schema))
        .fallback(not_found)
        .with_state(service)
}
