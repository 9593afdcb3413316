//! Serves any [`Backend`] over the remote backend protocol, so a mock
//! fixture can stand in for the model servers.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use narrative_core::backends::protocol::*;
use narrative_core::backends::{Backend, BackendError, QuestionRequest};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Deadline applied when the client sends no header.
pub const DEFAULT_DEADLINE_MS: u64 = 5000;

type Shared = Arc<dyn Backend>;

fn error_response(err: &BackendError) -> Response {
    let status = StatusCode::from_u16(err.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(ErrorBody::from(err))).into_response()
}

fn deadline(headers: &HeaderMap) -> u64 {
    headers
        .get(DEADLINE_HEADER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DEADLINE_MS)
}

/// Decodes `body`, runs `f` on a blocking worker and enforces the deadline.
async fn handle<Req, Resp, F>(backend: Shared, headers: HeaderMap, body: Bytes, f: F) -> Response
where
    Req: DeserializeOwned + Send + 'static,
    Resp: Serialize + Send + 'static,
    F: FnOnce(&dyn Backend, Req) -> Result<Resp, BackendError> + Send + 'static,
{
    let req: Req = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(&BackendError::Invalid(e.to_string())),
    };
    let ms = deadline(&headers);
    let work = tokio::task::spawn_blocking(move || f(backend.as_ref(), req));
    match tokio::time::timeout(Duration::from_millis(ms), work).await {
        Ok(Ok(Ok(resp))) => Json(resp).into_response(),
        Ok(Ok(Err(e))) => error_response(&e),
        Ok(Err(e)) => error_response(&BackendError::Unavailable(format!("worker failed: {e}"))),
        Err(_) => error_response(&BackendError::Timeout(ms)),
    }
}

async fn regions(State(b): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    handle(b, headers, body, |b, r: RegionsRequest| {
        Ok(RegionsResponse {
            boxes: b.propose_regions(&r.image, &r.within, r.k)?,
        })
    })
    .await
}

async fn features(State(b): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    handle(b, headers, body, |b, r: FeaturesRequest| {
        Ok(FeaturesResponse {
            feature: b.region_feature(&r.image, &r.region)?,
        })
    })
    .await
}

async fn question(State(b): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    handle(b, headers, body, |b, r: QuestionRequestBody| {
        let question = b.generate_question(&QuestionRequest {
            image: &r.image,
            region: &r.region,
            feature: &r.feature,
            attempt: r.attempt,
        })?;
        Ok(QuestionResponse { question })
    })
    .await
}

async fn vqa(State(b): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    handle(b, headers, body, |b, r: VqaRequest| {
        let dist = b.answer_distribution(&r.image, &r.feature, &r.question)?;
        let answers = dist
            .vocab()
            .labels()
            .iter()
            .zip(dist.probs())
            .filter(|(_, p)| **p > 0.0)
            .map(|(label, prob)| LabelProb {
                label: label.clone(),
                prob: *prob,
            })
            .collect();
        Ok(VqaResponse { answers })
    })
    .await
}

async fn attention(State(b): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    handle(b, headers, body, |b, r: AttentionRequest| {
        let map = b.attention_map(&r.image, &r.phrase)?;
        Ok(AttentionResponse {
            rows: map.rows(),
            cols: map.cols(),
            values: map.values().to_vec(),
        })
    })
    .await
}

pub fn backend_router(backend: Arc<dyn Backend>) -> Router {
    Router::new()
        .route(REGIONS_PATH, post(regions))
        .route(FEATURES_PATH, post(features))
        .route(QUESTION_PATH, post(question))
        .route(VQA_PATH, post(vqa))
        .route(ATTENTION_PATH, post(attention))
        .with_state(backend)
}
