use narrative_core::backends::BackendError;
use narrative_core::pipeline::PipelineError;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("unknown image {0:?}")]
    UnknownImage(String),
    #[error("{message}")]
    InvalidAnswer { message: String, choices: Vec<String> },
    #[error("session {0:?} has no question awaiting an answer")]
    NoPendingQuestion(String),
    #[error("session {0:?} has no recorded choice yet")]
    NoPriorChoice(String),
    #[error("no preference model is loaded and the choice log has no training pairs")]
    ModelNotLoaded,
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("no such endpoint")]
    NotFound,
    #[error(transparent)]
    Pipeline(PipelineError),
    #[error("store: {0}")]
    Store(String),
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Backend {
                source: BackendError::UnknownImage(id),
                ..
            } => ServiceError::UnknownImage(id),
            PipelineError::InvalidAnswer { answer, choices } => ServiceError::InvalidAnswer {
                message: format!("{answer:?} is not an allowed answer"),
                choices,
            },
            other => ServiceError::Pipeline(other),
        }
    }
}

/// JSON error body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown-session",
            ServiceError::UnknownImage(_) => "unknown-image",
            ServiceError::InvalidAnswer { .. } => "invalid-answer",
            ServiceError::NoPendingQuestion(_) => "no-pending-question",
            ServiceError::NoPriorChoice(_) => "no-prior-choice",
            ServiceError::ModelNotLoaded => "model-not-loaded",
            ServiceError::BadRequest(_) => "bad-request",
            ServiceError::NotFound => "not-found",
            ServiceError::Pipeline(e) => e.code(),
            ServiceError::Store(_) => "store-error",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            ServiceError::UnknownSession(_) | ServiceError::UnknownImage(_) | ServiceError::NotFound => 404,
            ServiceError::InvalidAnswer { .. } | ServiceError::BadRequest(_) => 422,
            ServiceError::NoPendingQuestion(_) | ServiceError::NoPriorChoice(_) | ServiceError::ModelNotLoaded => 409,
            ServiceError::Pipeline(PipelineError::Backend { source, .. }) => match source {
                BackendError::Unavailable(_) => 503,
                BackendError::Timeout(_) => 504,
                _ => 502,
            },
            ServiceError::Pipeline(PipelineError::ExhaustedAttempts { .. } | PipelineError::AllRegionsFailed(_)) => 422,
            ServiceError::Pipeline(_) => 500,
            ServiceError::Store(_) => 500,
        }
    }

    pub fn body(&self) -> ErrorResponse {
        ErrorResponse {
            code: self.code().to_string(),
            message: self.to_string(),
            choices: match self {
                ServiceError::InvalidAnswer { choices, .. } => Some(choices.clone()),
                _ => None,
            },
        }
    }
}
