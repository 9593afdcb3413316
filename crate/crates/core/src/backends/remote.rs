use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::{
    AttentionRequest, AttentionResponse, ErrorBody, FeaturesRequest, FeaturesResponse,
    QuestionRequestBody, QuestionResponse, RegionsRequest, RegionsResponse, VqaRequest, VqaResponse,
    ATTENTION_PATH, DEADLINE_HEADER, FEATURES_PATH, QUESTION_PATH, REGIONS_PATH, VQA_PATH,
};
use super::{
    check_proposal_request, check_question_text, AnswerDistribution, AttentionMap, Backend,
    BackendError, FeatureVector, ImageRef, QuestionRequest, RawBox, Vocabulary,
};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// e.g. `http://127.0.0.1:9000`
    pub base_url: String,
    pub deadline: Duration,
    pub max_in_flight: usize,
    pub feature_dim: usize,
}

/// Counting semaphore whose acquisition honors the call deadline.
#[derive(Debug)]
struct InFlight {
    available: Mutex<usize>,
    released: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self, until: Instant) -> Option<Permit<'_>> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            let now = Instant::now();
            if now >= until {
                return None;
            }
            n = self
                .released
                .wait_timeout(n, until - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
        *n -= 1;
        Some(Permit(self))
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.released.notify_one();
    }
}

/// HTTP client for a backend served over the remote protocol.
///
/// Every call completes or fails within `deadline`, including time spent
/// waiting for an in-flight slot.
pub struct RemoteBackend {
    config: RemoteConfig,
    vocab: Arc<Vocabulary>,
    agent: ureq::Agent,
    in_flight: InFlight,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend").field("config", &self.config).finish()
    }
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig, vocab: Arc<Vocabulary>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.deadline))
            .http_status_as_error(false)
            .build()
            .into();
        let in_flight = InFlight {
            available: Mutex::new(config.max_in_flight.max(1)),
            released: Condvar::new(),
        };
        Self {
            config,
            vocab,
            agent,
            in_flight,
        }
    }

    fn deadline_ms(&self) -> u64 {
        self.config.deadline.as_millis() as u64
    }

    fn call<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp, BackendError> {
        let start = Instant::now();
        let until = start + self.config.deadline;
        let _permit = self
            .in_flight
            .acquire(until)
            .ok_or(BackendError::Timeout(self.deadline_ms()))?;
        let remaining = until.saturating_duration_since(Instant::now());
        if remaining.is_zero() {
            return Err(BackendError::Timeout(self.deadline_ms()));
        }
        let url = format!("{}{}", self.config.base_url.trim_end_matches('/'), path);
        let result = self
            .agent
            .post(&url)
            .config()
            .timeout_global(Some(remaining))
            .build()
            .header(DEADLINE_HEADER, remaining.as_millis().to_string())
            .send_json(body);
        let mut response = result.map_err(|e| self.map_transport(e))?;
        let status = response.status().as_u16();
        if (200..300).contains(&status) {
            response
                .body_mut()
                .read_json::<Resp>()
                .map_err(|e| match e {
                    ureq::Error::Timeout(_) => BackendError::Timeout(self.deadline_ms()),
                    other => BackendError::Invalid(format!("{path}: malformed response: {other}")),
                })
        } else {
            match response.body_mut().read_json::<ErrorBody>() {
                Ok(body) if body.code == BackendError::Timeout(0).code() => Err(BackendError::Timeout(self.deadline_ms())),
                Ok(body) => Err(body.into()),
                Err(_) if status == 503 => Err(BackendError::Unavailable(format!("{path}: HTTP 503"))),
                Err(_) => Err(BackendError::Remote {
                    code: format!("http-{status}"),
                    message: format!("{path} failed without an error body"),
                }),
            }
        }
    }

    fn map_transport(&self, err: ureq::Error) -> BackendError {
        match err {
            ureq::Error::Timeout(_) => BackendError::Timeout(self.deadline_ms()),
            ureq::Error::Io(e) if matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) => {
                BackendError::Timeout(self.deadline_ms())
            }
            other => BackendError::Unavailable(other.to_string()),
        }
    }
}

impl Backend for RemoteBackend {
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    fn propose_regions(&self, image: &ImageRef, within: &RawBox, k: usize) -> Result<Vec<RawBox>, BackendError> {
        check_proposal_request(image, within, k)?;
        let resp: RegionsResponse = self.call(
            REGIONS_PATH,
            &RegionsRequest {
                image: image.clone(),
                within: *within,
                k,
            },
        )?;
        if resp.boxes.len() > k {
            return Err(BackendError::Invalid(format!("asked for {k} regions, got {}", resp.boxes.len())));
        }
        let (w, h) = image.dims();
        if let Some(b) = resp.boxes.iter().find(|b| !b.within(w, h)) {
            return Err(BackendError::Invalid(format!("remote region {b} lies outside the image")));
        }
        Ok(resp.boxes)
    }

    fn region_feature(&self, image: &ImageRef, region: &RawBox) -> Result<FeatureVector, BackendError> {
        let resp: FeaturesResponse = self.call(
            FEATURES_PATH,
            &FeaturesRequest {
                image: image.clone(),
                region: *region,
            },
        )?;
        resp.feature.expect_dim(self.config.feature_dim)?;
        Ok(resp.feature)
    }

    fn generate_question(&self, request: &QuestionRequest<'_>) -> Result<String, BackendError> {
        request.feature.expect_dim(self.config.feature_dim)?;
        let resp: QuestionResponse = self.call(
            QUESTION_PATH,
            &QuestionRequestBody {
                image: request.image.clone(),
                region: *request.region,
                feature: request.feature.clone(),
                attempt: request.attempt,
            },
        )?;
        check_question_text(&resp.question)?;
        Ok(resp.question)
    }

    fn answer_distribution(
        &self,
        image: &ImageRef,
        feature: &FeatureVector,
        question: &str,
    ) -> Result<AnswerDistribution, BackendError> {
        feature.expect_dim(self.config.feature_dim)?;
        let resp: VqaResponse = self.call(
            VQA_PATH,
            &VqaRequest {
                image: image.clone(),
                feature: feature.clone(),
                question: question.to_string(),
            },
        )?;
        let mut weights = vec![0.0; self.vocab.len()];
        let mut unknown = Vec::new();
        for lp in resp.answers {
            match self.vocab.index_of(&lp.label) {
                Some(i) if lp.prob.is_finite() && lp.prob >= 0.0 => weights[i] += lp.prob,
                Some(_) => return Err(BackendError::Invalid(format!("bad probability for {:?}", lp.label))),
                None => unknown.push(lp.label),
            }
        }
        if !unknown.is_empty() {
            log::warn!("dropping {} labels outside the vocabulary: {unknown:?}", unknown.len());
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(BackendError::UnknownVocabulary(unknown));
        }
        AnswerDistribution::from_weights(self.vocab.clone(), weights)
    }

    fn attention_map(&self, image: &ImageRef, phrase: &[String]) -> Result<AttentionMap, BackendError> {
        if phrase.is_empty() {
            return Err(BackendError::Invalid("attention phrase is empty".into()));
        }
        let resp: AttentionResponse = self.call(
            ATTENTION_PATH,
            &AttentionRequest {
                image: image.clone(),
                phrase: phrase.to_vec(),
            },
        )?;
        AttentionMap::new(resp.rows, resp.cols, resp.values)
    }
}
