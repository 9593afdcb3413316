//! Narrative generation in automatic and interactive mode.
//!
//! Automatic mode asks one question per region (the whole image first, then
//! each proposal by rank), answers it with the most probable label and
//! converts the pair into a sentence. Interactive mode shows a person an
//! uncertain question, then drills into the image region their answer
//! points at.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::{AnswerDistribution, Backend, BackendError, FeatureVector, ImageRef, QuestionRequest, RawBox};
use crate::converter::{Answer, ConvertError, Converter, Question, Sentence};
use crate::preference::{ChoiceRecord, PreferenceError, PreferenceModel, QuestionEncoder};
use crate::selector::{
    attention_to_box, is_eligible, magnify_region, substitute_wh, top_k_choices, Region, RegionSource, SelectorConfig,
    SelectorError,
};
use crate::text;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("{context}: {source}")]
    Backend {
        context: String,
        #[source]
        source: BackendError,
    },
    #[error("no region of image {0:?} produced a sentence")]
    AllRegionsFailed(String),
    #[error("no eligible question for image {image:?} after {attempts} attempts")]
    ExhaustedAttempts { image: String, attempts: usize },
    #[error("{answer:?} is not an answer in the vocabulary; choices: {choices:?}")]
    InvalidAnswer { answer: String, choices: Vec<String> },
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

impl PipelineError {
    /// Stable machine-readable code for API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Backend { source, .. } => match source {
                BackendError::UnknownImage(_) => "unknown-image",
                BackendError::Unavailable(_) => "backend-unavailable",
                BackendError::Timeout(_) => "backend-timeout",
                _ => "backend-error",
            },
            PipelineError::AllRegionsFailed(_) => "all-regions-failed",
            PipelineError::ExhaustedAttempts { .. } => "exhausted-attempts",
            PipelineError::InvalidAnswer { .. } => "invalid-answer",
            PipelineError::Convert(e) => e.code(),
            PipelineError::Selector(SelectorError::NoActivation) => "no-activation",
            PipelineError::Selector(_) => "selector-error",
            PipelineError::Preference(_) => "preference-error",
            PipelineError::InvalidConfig(_) => "config",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Region proposals requested per narrative, the whole image included
    /// when the backend ranks it first.
    pub proposals: usize,
    pub max_sentences: usize,
    /// Dimension of hashed question features fed to the preference model.
    pub question_dim: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            proposals: 5,
            max_sentences: 6,
            question_dim: 16,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.proposals == 0 || self.max_sentences == 0 || self.question_dim == 0 {
            return Err(PipelineError::InvalidConfig(
                "proposals, max_sentences and question_dim must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Auto,
    User,
}

/// The question and answer behind one narrative sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: Question,
    pub answer: Answer,
    pub region: Region,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Narrative {
    pub image: ImageRef,
    pub sentences: Vec<Sentence>,
    /// `provenance[i]` produced `sentences[i]`.
    pub provenance: Vec<QAPair>,
    /// Region the user's answer pointed at, for interactive narratives.
    pub focus: Option<Region>,
    /// Set when attention found nothing and the whole image was narrated instead.
    pub fallback: bool,
}

impl Narrative {
    pub fn texts(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn text(&self) -> String {
        self.texts().join(" ")
    }
}

/// A question worth asking a person, with the choices to present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractiveQuestion {
    pub question: Question,
    pub choices: Vec<String>,
    /// Generation attempt that produced the question, 0-based.
    pub attempt: usize,
    pub max_prob: f64,
}

/// Result of carrying a learned preference to a new image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Personalized {
    pub question: InteractiveQuestion,
    pub predicted_answer: String,
    pub narrative: Narrative,
}

#[derive(Clone)]
pub struct Pipeline {
    backend: Arc<dyn Backend>,
    converter: Converter,
    selector: SelectorConfig,
    config: PipelineConfig,
    encoder: QuestionEncoder,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("selector", &self.selector)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn backend_err(image: &ImageRef, what: &str, region: Option<&RawBox>) -> impl FnOnce(BackendError) -> PipelineError {
    let context = match region {
        Some(r) => format!("{what} for region {r} of image {:?}", image.id),
        None => format!("{what} for image {:?}", image.id),
    };
    move |source| PipelineError::Backend { context, source }
}

struct Builder {
    sentences: Vec<Sentence>,
    provenance: Vec<QAPair>,
    max: usize,
}

impl Builder {
    fn full(&self) -> bool {
        self.sentences.len() >= self.max
    }

    /// Adds the sentence unless its text is already present.
    fn push(&mut self, sentence: Sentence, pair: QAPair) {
        if self.full() || self.sentences.iter().any(|s| s.text == sentence.text) {
            return;
        }
        self.sentences.push(sentence);
        self.provenance.push(pair);
    }
}

impl Pipeline {
    pub fn new(
        backend: Arc<dyn Backend>,
        converter: Converter,
        selector: SelectorConfig,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        selector.validate()?;
        config.validate()?;
        Ok(Self {
            backend,
            converter,
            selector,
            config,
            encoder: QuestionEncoder::new(config.question_dim),
        })
    }

    pub fn backend(&self) -> &Arc<dyn Backend> {
        &self.backend
    }

    pub fn converter(&self) -> &Converter {
        &self.converter
    }

    pub fn selector_config(&self) -> &SelectorConfig {
        &self.selector
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn question_feature(&self, question: &str) -> FeatureVector {
        self.encoder.encode(question)
    }

    /// Self-answered narrative of the whole image.
    pub fn narrate_auto(&self, image: &ImageRef) -> Result<Narrative, PipelineError> {
        let mut b = self.builder();
        self.narrate_into(image, Region::whole(image), Mode::Auto, &mut b)?;
        self.finish(image, b, None, false)
    }

    fn builder(&self) -> Builder {
        Builder {
            sentences: Vec::new(),
            provenance: Vec::new(),
            max: self.config.max_sentences,
        }
    }

    fn finish(&self, image: &ImageRef, b: Builder, focus: Option<Region>, fallback: bool) -> Result<Narrative, PipelineError> {
        if b.sentences.is_empty() {
            return Err(PipelineError::AllRegionsFailed(image.id.clone()));
        }
        Ok(Narrative {
            image: image.clone(),
            sentences: b.sentences,
            provenance: b.provenance,
            focus,
            fallback,
        })
    }

    /// Narrates `outer` and then the backend's proposals inside it.
    fn narrate_into(&self, image: &ImageRef, outer: Region, mode: Mode, b: &mut Builder) -> Result<(), PipelineError> {
        let proposals = self
            .backend
            .propose_regions(image, &outer.bbox, self.config.proposals)
            .map_err(backend_err(image, "region proposals", Some(&outer.bbox)))?;
        let mut regions = vec![outer.clone()];
        regions.extend(
            proposals
                .into_iter()
                .filter(|bx| *bx != outer.bbox)
                .enumerate()
                .map(|(rank, bx)| Region::proposal(bx, rank)),
        );
        for region in regions {
            if b.full() {
                break;
            }
            if let Some((sentence, pair)) = self.describe_region(image, region, mode)? {
                b.push(sentence, pair);
            }
        }
        Ok(())
    }

    /// One self-answered sentence for a region, or `None` when the region
    /// has no usable question or the pair does not convert.
    fn describe_region(&self, image: &ImageRef, region: Region, mode: Mode) -> Result<Option<(Sentence, QAPair)>, PipelineError> {
        let feature = self
            .backend
            .region_feature(image, &region.bbox)
            .map_err(backend_err(image, "region feature", Some(&region.bbox)))?;
        let raw = match self.backend.generate_question(&QuestionRequest {
            image,
            region: &region.bbox,
            feature: &feature,
            attempt: 0,
        }) {
            Ok(q) => q,
            Err(BackendError::FixtureMiss(_)) => return Ok(None),
            Err(e) => return Err(backend_err(image, "question generation", Some(&region.bbox))(e)),
        };
        let Ok(question) = self.converter.parse_question(&raw) else {
            log::debug!("skipping unparseable question {raw:?}");
            return Ok(None);
        };
        let dist = match self.backend.answer_distribution(image, &feature, &raw) {
            Ok(d) => d,
            Err(BackendError::FixtureMiss(_)) => return Ok(None),
            Err(e) => return Err(backend_err(image, "answer distribution", Some(&region.bbox))(e)),
        };
        let label = dist.vocab().label(dist.argmax()).expect("argmax within vocabulary").to_string();
        let Ok(answer) = Answer::for_question(&question, &label) else {
            return Ok(None);
        };
        match self.converter.convert(&question, &answer) {
            Ok(sentence) => Ok(Some((
                sentence,
                QAPair {
                    question,
                    answer,
                    region,
                    mode,
                },
            ))),
            Err(e) => {
                log::debug!("dropping {raw:?} / {label:?}: {e}");
                Ok(None)
            }
        }
    }

    fn whole_image_distribution(&self, image: &ImageRef, question: &str) -> Result<AnswerDistribution, PipelineError> {
        self.backend
            .answer_distribution(image, &image.feature, question)
            .map_err(backend_err(image, "answer distribution", None))
    }

    /// Generates whole-image questions until one passes the eligibility check.
    pub fn next_interactive_question(&self, image: &ImageRef) -> Result<InteractiveQuestion, PipelineError> {
        let frame = image.frame();
        let attempts = self.selector.eligibility.max_attempts;
        for attempt in 0..attempts {
            let raw = match self.backend.generate_question(&QuestionRequest {
                image,
                region: &frame,
                feature: &image.feature,
                attempt,
            }) {
                Ok(q) => q,
                Err(BackendError::FixtureMiss(_)) => break,
                Err(e) => return Err(backend_err(image, "question generation", None)(e)),
            };
            let Ok(question) = self.converter.parse_question(&raw) else {
                continue;
            };
            let dist = match self.backend.answer_distribution(image, &image.feature, &raw) {
                Ok(d) => d,
                Err(BackendError::FixtureMiss(_)) => continue,
                Err(e) => return Err(backend_err(image, "answer distribution", None)(e)),
            };
            if is_eligible(&dist, question.qtype(), &self.selector.eligibility) {
                return Ok(InteractiveQuestion {
                    question,
                    choices: top_k_choices(&dist, self.selector.top_k)?,
                    attempt,
                    max_prob: dist.max_prob(),
                });
            }
        }
        Err(PipelineError::ExhaustedAttempts {
            image: image.id.clone(),
            attempts,
        })
    }

    /// Vocabulary label for a user's answer: exact match, then lowercase match.
    pub fn resolve_answer(&self, image: &ImageRef, question: &Question, user_answer: &str) -> Result<String, PipelineError> {
        let vocab = self.backend.vocabulary();
        if let Some(i) = vocab.resolve(user_answer) {
            return Ok(vocab.label(i).expect("resolved index").to_string());
        }
        let choices = match self.whole_image_distribution(image, question.raw()) {
            Ok(d) => top_k_choices(&d, self.selector.top_k.min(d.len()))?,
            Err(_) => Vec::new(),
        };
        Err(PipelineError::InvalidAnswer {
            answer: user_answer.to_string(),
            choices,
        })
    }

    /// Narrative of the region the answer points at, led by the sentence for
    /// the answered question itself.
    pub fn submit_answer(&self, image: &ImageRef, question: &Question, user_answer: &str) -> Result<Narrative, PipelineError> {
        let label = self.resolve_answer(image, question, user_answer)?;
        let answer = Answer::for_question(question, &label).map_err(|_| PipelineError::InvalidAnswer {
            answer: user_answer.to_string(),
            choices: Vec::new(),
        })?;
        let own = self.converter.convert(question, &answer);
        let phrase = match substitute_wh(&self.converter, question, &answer) {
            Ok(words) => words,
            Err(SelectorError::Convert(ConvertError::NoWhToken(_))) => match &own {
                Ok(s) => text::words(&s.text),
                Err(_) => answer.label().split_whitespace().map(str::to_string).collect(),
            },
            Err(e) => return Err(e.into()),
        };
        let map = self
            .backend
            .attention_map(image, &phrase)
            .map_err(backend_err(image, "attention", None))?;
        let dims = image.dims();
        let focus = match attention_to_box(&map, dims, self.selector.activation_fraction) {
            Ok(bx) => Some(magnify_region(
                &bx,
                dims,
                self.selector.alpha_mag,
                RegionSource::Attention {
                    phrase: phrase.join(" "),
                },
            )?),
            Err(SelectorError::NoActivation) => None,
            Err(e) => return Err(e.into()),
        };

        let mut b = self.builder();
        let own_region = focus.clone().unwrap_or_else(|| Region::whole(image));
        match own {
            Ok(sentence) => b.push(
                sentence,
                QAPair {
                    question: question.clone(),
                    answer,
                    region: own_region.clone(),
                    mode: Mode::User,
                },
            ),
            Err(e) => log::warn!("answered question {:?} does not convert: {e}", question.raw()),
        }
        let fallback = focus.is_none();
        if fallback {
            log::info!("no attention for {:?} on image {:?}; narrating the whole image", phrase.join(" "), image.id);
        }
        self.narrate_into(image, own_region, Mode::Auto, &mut b)?;
        self.finish(image, b, focus, fallback)
    }

    /// Decision record for the preference log.
    pub fn choice_record(
        &self,
        user_id: &str,
        image: &ImageRef,
        question: &Question,
        answer: &str,
        presented: &[String],
    ) -> Result<ChoiceRecord, PipelineError> {
        let vocab = self.backend.vocabulary();
        let index = vocab.resolve(answer).ok_or_else(|| PipelineError::InvalidAnswer {
            answer: answer.to_string(),
            choices: presented.to_vec(),
        })?;
        let mut rec = ChoiceRecord::new(
            user_id,
            image.feature.clone(),
            self.question_feature(question.raw()),
            index,
            vocab.len(),
        )?;
        let shown: Vec<usize> = presented.iter().filter_map(|c| vocab.resolve(c)).collect();
        if !shown.is_empty() {
            rec.presented = Some(shown);
        }
        rec.image_id = Some(image.id.clone());
        rec.question = Some(question.raw().to_string());
        Ok(rec)
    }

    /// Asks an eligible question on `image`, predicts the user's answer from
    /// their earlier choice and narrates the region that answer points at.
    pub fn personalize(&self, model: &PreferenceModel, prior: &ChoiceRecord, image: &ImageRef) -> Result<Personalized, PipelineError> {
        let vocab = self.backend.vocabulary();
        if model.vocab_size != vocab.len() {
            return Err(PreferenceError::Dimension {
                what: "model vocabulary",
                expected: vocab.len(),
                got: model.vocab_size,
            }
            .into());
        }
        let iq = self.next_interactive_question(image)?;
        let q_feature = self.question_feature(iq.question.raw());
        let (index, _) = model.predict_from_record(prior, &image.feature, &q_feature)?;
        let predicted = vocab.label(index).expect("model vocabulary matches").to_string();
        let narrative = self.submit_answer(image, &iq.question, &predicted)?;
        Ok(Personalized {
            question: iq,
            predicted_answer: predicted,
            narrative,
        })
    }
}

