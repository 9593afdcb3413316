//! Contracts for the neural stages of the narrative pipeline.
//!
//! Region proposal, region features, question generation, answer
//! distributions and attention are all served through [`Backend`]. Two
//! implementations ship here: [`MockBackend`], a pure function of a fixture
//! file, and [`RemoteBackend`], an HTTP client for models served elsewhere.

mod mock;
pub mod protocol;
mod remote;
mod types;

use thiserror::Error;

pub use mock::{Fixture, FixtureImage, ImageCatalog, MockBackend, FIXTURE_SCHEMA};
pub use remote::{RemoteBackend, RemoteConfig};
pub use types::{
    AnswerDistribution, AttentionMap, FeatureVector, ImageRef, RawBox, Vocabulary,
    DISTRIBUTION_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend call exceeded its deadline of {0} ms")]
    Timeout(u64),
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("unknown image {0:?}")]
    UnknownImage(String),
    #[error("fixture has no entry for {0}")]
    FixtureMiss(String),
    #[error("backend returned labels outside the configured vocabulary: {0:?}")]
    UnknownVocabulary(Vec<String>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("remote error {code}: {message}")]
    Remote { code: String, message: String },
    #[error("invalid backend data: {0}")]
    Invalid(String),
}

/// Input to question generation for one region.
///
/// `attempt` selects the next candidate when the caller regenerates
/// questions until one passes the eligibility check.
#[derive(Debug, Clone, Copy)]
pub struct QuestionRequest<'a> {
    pub image: &'a ImageRef,
    pub region: &'a RawBox,
    pub feature: &'a FeatureVector,
    pub attempt: usize,
}

/// The four neural stages plus region featurization.
///
/// Implementations must be callable concurrently from many sessions.
pub trait Backend: Send + Sync {
    /// Closed answer vocabulary used by [`Backend::answer_distribution`].
    fn vocabulary(&self) -> &std::sync::Arc<Vocabulary>;

    /// Feature dimensionality of images and regions.
    fn feature_dim(&self) -> usize;

    /// Up to `k` ranked boxes inside `within` (full-image pixel coordinates).
    fn propose_regions(
        &self,
        image: &ImageRef,
        within: &RawBox,
        k: usize,
    ) -> Result<Vec<RawBox>, BackendError>;

    fn region_feature(&self, image: &ImageRef, region: &RawBox) -> Result<FeatureVector, BackendError>;

    /// Raw question text ending in `?`.
    fn generate_question(&self, request: &QuestionRequest<'_>) -> Result<String, BackendError>;

    fn answer_distribution(
        &self,
        image: &ImageRef,
        feature: &FeatureVector,
        question: &str,
    ) -> Result<AnswerDistribution, BackendError>;

    fn attention_map(&self, image: &ImageRef, phrase: &[String]) -> Result<AttentionMap, BackendError>;
}

pub(crate) fn check_proposal_request(image: &ImageRef, within: &RawBox, k: usize) -> Result<(), BackendError> {
    if image.width == 0 || image.height == 0 {
        return Err(BackendError::EmptyImage);
    }
    if k == 0 {
        return Err(BackendError::Invalid("k must be at least 1".into()));
    }
    let (w, h) = image.dims();
    if !within.within(w, h) {
        return Err(BackendError::Invalid(format!("region {within} lies outside the image")));
    }
    Ok(())
}

pub(crate) fn check_question_text(text: &str) -> Result<(), BackendError> {
    let t = text.trim();
    if t.len() < 2 || !t.ends_with('?') {
        return Err(BackendError::Invalid(format!("question {text:?} must be non-empty and end with '?'")));
    }
    Ok(())
}
