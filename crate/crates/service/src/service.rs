//! Session operations independent of the HTTP transport.

use std::path::Path;
use std::sync::{Arc, RwLock};

use narrative_core::backends::{ImageCatalog, ImageRef};
use narrative_core::config::AppConfig;
use narrative_core::converter::{QType, Question};
use narrative_core::pipeline::{Mode, Narrative, Pipeline, PipelineError};
use narrative_core::preference::{self, build_pairs, train, ChoiceRecord, PreferenceModel, TrainConfig};
use narrative_core::selector::Region;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::store::{EventKind, HistoryEntry, NarrativeSource, PendingQuestion, Session, SessionStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub image_id: String,
    pub text: String,
    pub qtype: QType,
    pub choices: Vec<String>,
}

impl QuestionView {
    fn new(image_id: &str, q: &Question, choices: &[String]) -> Self {
        Self {
            image_id: image_id.to_string(),
            text: q.raw().to_string(),
            qtype: q.qtype(),
            choices: choices.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceView {
    pub text: String,
    pub question: String,
    pub answer: String,
    pub rule: Option<String>,
    pub mode: Mode,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeView {
    pub image_id: String,
    pub text: String,
    pub sentences: Vec<SentenceView>,
    pub focus: Option<Region>,
    pub fallback: bool,
}

impl From<&Narrative> for NarrativeView {
    fn from(n: &Narrative) -> Self {
        Self {
            image_id: n.image.id.clone(),
            text: n.text(),
            sentences: n
                .sentences
                .iter()
                .zip(&n.provenance)
                .map(|(s, qa)| SentenceView {
                    text: s.text.clone(),
                    question: s.question.clone(),
                    answer: s.answer.clone(),
                    rule: s.rule.clone(),
                    mode: qa.mode,
                    region: qa.region.clone(),
                })
                .collect(),
            focus: n.focus.clone(),
            fallback: n.fallback,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub image_id: String,
    pub question: Option<String>,
    pub presented: Vec<String>,
    pub answer: Option<String>,
    pub source: NarrativeSource,
    pub request_id: Option<String>,
    pub narrative: NarrativeView,
}

impl From<&HistoryEntry> for HistoryView {
    fn from(h: &HistoryEntry) -> Self {
        Self {
            image_id: h.image_id.clone(),
            question: h.question.as_ref().map(|q| q.raw().to_string()),
            presented: h.presented.clone(),
            answer: h.answer.clone(),
            source: h.source,
            request_id: h.request_id.clone(),
            narrative: (&h.narrative).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub user_id: String,
    pub created_at: u64,
    pub updated_at: u64,
    /// Question awaiting an answer.
    pub question: Option<QuestionView>,
    pub history: Vec<HistoryView>,
}

impl From<&Session> for SessionView {
    fn from(s: &Session) -> Self {
        Self {
            id: s.id.clone(),
            user_id: s.user_id.clone(),
            created_at: s.created_at,
            updated_at: s.updated_at,
            question: s.pending.as_ref().map(|p| QuestionView::new(&p.image_id, &p.question, &p.choices)),
            history: s.history.iter().map(HistoryView::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub session_id: String,
    pub request_id: String,
    pub answer: String,
    pub narrative: NarrativeView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalizeResponse {
    pub session_id: String,
    pub request_id: String,
    pub question: QuestionView,
    pub predicted_answer: String,
    pub narrative: NarrativeView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub images: usize,
    pub sessions: usize,
    pub model_loaded: bool,
}

enum ModelSlot {
    Empty,
    /// Loaded from disk; never retrained.
    Fixed(Arc<PreferenceModel>),
    /// Trained from the choice log when it held `records` records.
    Trained { records: usize, model: Arc<PreferenceModel> },
}

pub struct Service {
    pipeline: Pipeline,
    catalog: ImageCatalog,
    store: SessionStore,
    train: TrainConfig,
    model: RwLock<ModelSlot>,
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl Service {
    pub fn new(pipeline: Pipeline, catalog: ImageCatalog, store: SessionStore, train: TrainConfig) -> Self {
        Self {
            pipeline,
            catalog,
            store,
            train,
            model: RwLock::new(ModelSlot::Empty),
        }
    }

    pub fn from_config(cfg: &AppConfig) -> Result<Self, ServiceError> {
        let bad = |e: narrative_core::config::ConfigError| ServiceError::BadRequest(e.to_string());
        let (backend, catalog) = cfg.build_backend().map_err(bad)?;
        let converter = cfg.build_converter().map_err(bad)?;
        let pipeline = Pipeline::new(backend, converter, cfg.selector, cfg.pipeline)?;
        let store = SessionStore::open(&cfg.service.log_dir, cfg.service.snapshot_every)?;
        let service = Self::new(pipeline, catalog, store, cfg.preference);
        if let Some(path) = &cfg.service.model_path {
            if path.exists() {
                service.load_model(path)?;
            }
        }
        Ok(service)
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn catalog(&self) -> &ImageCatalog {
        &self.catalog
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn load_model(&self, path: &Path) -> Result<(), ServiceError> {
        let model = PreferenceModel::load(path).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        self.set_model(model);
        Ok(())
    }

    pub fn set_model(&self, model: PreferenceModel) {
        *self.model.write().expect("model slot") = ModelSlot::Fixed(Arc::new(model));
    }

    fn image(&self, id: &str) -> Result<&ImageRef, ServiceError> {
        self.catalog.get(id).map_err(|_| ServiceError::UnknownImage(id.to_string()))
    }

    fn session(&self, id: &str) -> Result<Session, ServiceError> {
        self.store.get(id).ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok".into(),
            images: self.catalog.len(),
            sessions: self.store.len(),
            model_loaded: !matches!(*self.model.read().expect("model slot"), ModelSlot::Empty),
        }
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView, ServiceError> {
        Ok((&self.session(id)?).into())
    }

    /// New session showing the first eligible question on `image_id`. When
    /// the image has none, the session opens with an automatic narrative.
    pub fn create_session(&self, user_id: &str, image_id: &str) -> Result<SessionView, ServiceError> {
        if user_id.trim().is_empty() {
            return Err(ServiceError::BadRequest("user_id is empty".into()));
        }
        let image = self.image(image_id)?;
        let id = new_id();
        let created = EventKind::SessionCreated {
            user_id: user_id.to_string(),
        };
        let events = match self.pipeline.next_interactive_question(image) {
            Ok(iq) => vec![
                created,
                EventKind::QuestionShown {
                    image_id: image_id.to_string(),
                    question: iq.question,
                    choices: iq.choices,
                },
            ],
            Err(PipelineError::ExhaustedAttempts { .. }) => {
                let narrative = self.pipeline.narrate_auto(image)?;
                vec![
                    created,
                    EventKind::NarrativeEmitted {
                        request_id: None,
                        source: NarrativeSource::Auto,
                        image_id: image_id.to_string(),
                        question: None,
                        presented: Vec::new(),
                        answer: None,
                        narrative,
                    },
                ]
            }
            Err(e) => return Err(e.into()),
        };
        let lock = self.store.session_lock(&id);
        let _guard = lock.lock().expect("session lock");
        Ok((&self.store.commit(&id, events)?).into())
    }

    /// Shows a question on another image within an existing session.
    pub fn show_question(&self, session_id: &str, image_id: &str) -> Result<SessionView, ServiceError> {
        let lock = self.store.session_lock(session_id);
        let _guard = lock.lock().expect("session lock");
        self.session(session_id)?;
        let image = self.image(image_id)?;
        let iq = self.pipeline.next_interactive_question(image)?;
        let session = self.store.commit(
            session_id,
            vec![EventKind::QuestionShown {
                image_id: image_id.to_string(),
                question: iq.question,
                choices: iq.choices,
            }],
        )?;
        Ok((&session).into())
    }

    /// Answers the pending question. Repeating a request id returns the
    /// original response without recording anything.
    pub fn post_answer(&self, session_id: &str, answer: &str, request_id: Option<&str>) -> Result<AnswerResponse, ServiceError> {
        let lock = self.store.session_lock(session_id);
        let _guard = lock.lock().expect("session lock");
        let session = self.session(session_id)?;
        if let Some(r) = request_id {
            if let Some(&i) = session.requests.get(r) {
                let h = &session.history[i];
                log::info!("session {session_id}: replaying request {r}");
                return Ok(AnswerResponse {
                    session_id: session_id.to_string(),
                    request_id: r.to_string(),
                    answer: h.answer.clone().unwrap_or_default(),
                    narrative: (&h.narrative).into(),
                });
            }
        }
        let PendingQuestion {
            image_id,
            question,
            choices,
        } = session
            .pending
            .clone()
            .ok_or_else(|| ServiceError::NoPendingQuestion(session_id.to_string()))?;
        let image = self.image(&image_id)?;
        let invalid = |_| ServiceError::InvalidAnswer {
            message: format!("{answer:?} is not an allowed answer to {:?}", question.raw()),
            choices: choices.clone(),
        };
        let label = self.pipeline.resolve_answer(image, &question, answer).map_err(invalid)?;
        let narrative = match self.pipeline.submit_answer(image, &question, &label) {
            Err(e @ PipelineError::InvalidAnswer { .. }) => return Err(invalid(e)),
            other => other?,
        };
        let record = self.pipeline.choice_record(&session.user_id, image, &question, &label, &choices)?;
        let request_id = request_id.map(str::to_string).unwrap_or_else(new_id);
        let view = NarrativeView::from(&narrative);
        self.store.commit(
            session_id,
            vec![
                EventKind::AnswerSubmitted {
                    request_id: request_id.clone(),
                    answer: label.clone(),
                    record,
                },
                EventKind::NarrativeEmitted {
                    request_id: Some(request_id.clone()),
                    source: NarrativeSource::Answer,
                    image_id,
                    question: Some(question),
                    presented: choices,
                    answer: Some(label.clone()),
                    narrative,
                },
            ],
        )?;
        Ok(AnswerResponse {
            session_id: session_id.to_string(),
            request_id,
            answer: label,
            narrative: view,
        })
    }

    /// The loaded model, or one trained on the current choice log.
    fn model_for(&self, session_id: &str) -> Result<Arc<PreferenceModel>, ServiceError> {
        if let ModelSlot::Fixed(m) = &*self.model.read().expect("model slot") {
            return Ok(m.clone());
        }
        let records = preference::log::read(self.store.choices_path(), None).map_err(|e| ServiceError::Store(e.to_string()))?;
        if let ModelSlot::Trained { records: n, model } = &*self.model.read().expect("model slot") {
            if *n == records.len() {
                return Ok(model.clone());
            }
        }
        let pairs = build_pairs(&records);
        if pairs.is_empty() {
            return Err(ServiceError::ModelNotLoaded);
        }
        let model = Arc::new(train(&pairs, &self.train).map_err(|e| ServiceError::Pipeline(e.into()))?);
        self.store.commit(
            session_id,
            vec![EventKind::PreferenceTrained {
                records: records.len(),
                pairs: pairs.len(),
            }],
        )?;
        *self.model.write().expect("model slot") = ModelSlot::Trained {
            records: records.len(),
            model: model.clone(),
        };
        Ok(model)
    }

    /// Narrative of a new image driven by the answer the preference model
    /// predicts from this session's latest choice.
    pub fn personalize(&self, session_id: &str, image_id: &str, request_id: Option<&str>) -> Result<PersonalizeResponse, ServiceError> {
        let lock = self.store.session_lock(session_id);
        let _guard = lock.lock().expect("session lock");
        let session = self.session(session_id)?;
        if let Some(r) = request_id {
            if let Some(h) = session.requests.get(r).map(|&i| &session.history[i]) {
                if let Some(q) = &h.question {
                    return Ok(PersonalizeResponse {
                        session_id: session_id.to_string(),
                        request_id: r.to_string(),
                        question: QuestionView::new(&h.image_id, q, &h.presented),
                        predicted_answer: h.answer.clone().unwrap_or_default(),
                        narrative: (&h.narrative).into(),
                    });
                }
            }
        }
        let prior: ChoiceRecord = session
            .choices
            .last()
            .cloned()
            .ok_or_else(|| ServiceError::NoPriorChoice(session_id.to_string()))?;
        let image = self.image(image_id)?;
        let model = self.model_for(session_id)?;
        let out = self.pipeline.personalize(&model, &prior, image)?;
        let request_id = request_id.map(str::to_string).unwrap_or_else(new_id);
        let response = PersonalizeResponse {
            session_id: session_id.to_string(),
            request_id: request_id.clone(),
            question: QuestionView::new(image_id, &out.question.question, &out.question.choices),
            predicted_answer: out.predicted_answer.clone(),
            narrative: (&out.narrative).into(),
        };
        self.store.commit(
            session_id,
            vec![EventKind::NarrativeEmitted {
                request_id: Some(request_id),
                source: NarrativeSource::Personalized,
                image_id: image_id.to_string(),
                question: Some(out.question.question),
                presented: out.question.choices,
                answer: Some(out.predicted_answer),
                narrative: out.narrative,
            }],
        )?;
        Ok(response)
    }

    pub fn narrate(&self, image_id: &str) -> Result<NarrativeView, ServiceError> {
        let image = self.image(image_id)?;
        Ok((&self.pipeline.narrate_auto(image)?).into())
    }

    /// Recorded choices in log order, optionally for one user.
    pub fn choices(&self, user_id: Option<&str>) -> Result<Vec<ChoiceRecord>, ServiceError> {
        preference::log::read(self.store.choices_path(), user_id).map_err(|e| ServiceError::Store(e.to_string()))
    }
}
