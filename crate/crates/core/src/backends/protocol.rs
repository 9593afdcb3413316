//! Wire format of the remote backend protocol.
//!
//! Every endpoint takes a JSON POST body and answers either with the
//! matching response type or, on failure, a non-2xx status carrying
//! [`ErrorBody`]. Clients send their remaining budget in [`DEADLINE_HEADER`].

use serde::{Deserialize, Serialize};

use super::{BackendError, FeatureVector, ImageRef, RawBox};

pub const REGIONS_PATH: &str = "/v1/regions";
pub const FEATURES_PATH: &str = "/v1/features";
pub const QUESTION_PATH: &str = "/v1/question";
pub const VQA_PATH: &str = "/v1/vqa";
pub const ATTENTION_PATH: &str = "/v1/attention";

/// Milliseconds the server may spend on the call.
pub const DEADLINE_HEADER: &str = "x-deadline-ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionsRequest {
    pub image: ImageRef,
    pub within: RawBox,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionsResponse {
    pub boxes: Vec<RawBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesRequest {
    pub image: ImageRef,
    pub region: RawBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesResponse {
    pub feature: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRequestBody {
    pub image: ImageRef,
    pub region: RawBox,
    pub feature: FeatureVector,
    #[serde(default)]
    pub attempt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResponse {
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaRequest {
    pub image: ImageRef,
    pub feature: FeatureVector,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelProb {
    pub label: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaResponse {
    pub answers: Vec<LabelProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRequest {
    pub image: ImageRef,
    pub phrase: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionResponse {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl BackendError {
    /// Stable machine-readable code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            BackendError::Unavailable(_) => "backend-unavailable",
            BackendError::Timeout(_) => "deadline-exceeded",
            BackendError::EmptyImage => "empty-image",
            BackendError::UnknownImage(_) => "unknown-image",
            BackendError::FixtureMiss(_) => "fixture-miss",
            BackendError::UnknownVocabulary(_) => "unknown-vocabulary",
            BackendError::DimensionMismatch { .. } => "dimension-mismatch",
            BackendError::Remote { .. } => "remote-error",
            BackendError::Invalid(_) => "invalid-request",
        }
    }

    /// HTTP status a server should use for this error.
    pub fn http_status(&self) -> u16 {
        match self {
            BackendError::Unavailable(_) => 503,
            BackendError::Timeout(_) => 504,
            BackendError::UnknownImage(_) | BackendError::FixtureMiss(_) => 404,
            BackendError::Remote { .. } => 502,
            _ => 422,
        }
    }
}

impl From<&BackendError> for ErrorBody {
    fn from(err: &BackendError) -> Self {
        ErrorBody {
            code: err.code().to_string(),
            message: err.to_string(),
        }
    }
}

impl From<ErrorBody> for BackendError {
    fn from(body: ErrorBody) -> Self {
        match body.code.as_str() {
            "backend-unavailable" => BackendError::Unavailable(body.message),
            "unknown-image" => BackendError::UnknownImage(body.message),
            "fixture-miss" => BackendError::FixtureMiss(body.message),
            "empty-image" => BackendError::EmptyImage,
            _ => BackendError::Remote {
                code: body.code,
                message: body.message,
            },
        }
    }
}
