//! Python bindings. Structured results cross the boundary as plain dicts and
//! lists built from the same JSON the HTTP API returns.

use std::path::PathBuf;
use std::sync::Arc;

use narrative_core::backends::{AnswerDistribution, RawBox, Vocabulary};
use narrative_core::config::AppConfig;
use narrative_core::converter::{Converter as CoreConverter, QType};
use narrative_core::evalkit::{self, BenchmarkConfig};
use narrative_core::pipeline::Pipeline as CorePipeline;
use narrative_core::preference::{self, build_pairs, PreferenceModel as CoreModel, TrainConfig};
use narrative_core::selector::{self, EligibilityConfig};
use narrative_service::{Service as CoreService, ServiceError};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyKeyError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(narrative, NarrativeError, PyException, "Engine error; the message starts with its code.");

fn err(code: &str, e: impl std::fmt::Display) -> PyErr {
    NarrativeError::new_err(format!("{code}: {e}"))
}

fn service_err(e: ServiceError) -> PyErr {
    match e {
        ServiceError::UnknownSession(_) | ServiceError::UnknownImage(_) => PyKeyError::new_err(e.to_string()),
        other => err(other.code(), other),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| err("serialize", e))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_qtype(s: &str) -> PyResult<QType> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| PyValueError::new_err(format!("qtype must be yes_no, number or wh_other, got {s:?}")))
}

fn raw_box(b: (f64, f64, f64, f64)) -> PyResult<RawBox> {
    RawBox::new(b.0, b.1, b.2, b.3).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Rule-based question-answer to sentence converter.
#[pyclass(frozen)]
struct Converter {
    inner: CoreConverter,
}

#[pymethods]
impl Converter {
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<PathBuf>) -> PyResult<Self> {
        let inner = match config {
            Some(p) => {
                let cfg = AppConfig::load(&p).map_err(|e| err("config", e))?;
                cfg.build_converter().map_err(|e| err("config", e))?
            }
            None => CoreConverter::builtin(),
        };
        Ok(Self { inner })
    }

    /// Declarative sentence for `question` answered by `answer`.
    fn convert(&self, question: &str, answer: &str) -> PyResult<String> {
        self.inner
            .convert_text(question, answer)
            .map(|s| s.text)
            .map_err(|e| err(e.code(), e))
    }

    /// Sentence with the rule that produced it.
    fn convert_detailed<'py>(&self, py: Python<'py>, question: &str, answer: &str) -> PyResult<Bound<'py, PyAny>> {
        let s = self.inner.convert_text(question, answer).map_err(|e| err(e.code(), e))?;
        to_py(py, &s)
    }

    /// Tokens, tags and question type.
    fn parse<'py>(&self, py: Python<'py>, question: &str) -> PyResult<Bound<'py, PyAny>> {
        let q = self.inner.parse_question(question).map_err(|e| err(e.code(), e))?;
        to_py(py, &q)
    }
}

/// Narrative pipeline over the backend named in a config file.
#[pyclass(frozen)]
struct Pipeline {
    inner: CorePipeline,
    catalog: narrative_core::backends::ImageCatalog,
}

impl Pipeline {
    fn image(&self, id: &str) -> PyResult<&narrative_core::backends::ImageRef> {
        self.catalog.get(id).map_err(|_| PyKeyError::new_err(format!("unknown image {id:?}")))
    }
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (config=None, fixtures=None))]
    fn new(config: Option<PathBuf>, fixtures: Option<PathBuf>) -> PyResult<Self> {
        let mut cfg = match config {
            Some(p) => AppConfig::load(&p).map_err(|e| err("config", e))?,
            None => AppConfig::default(),
        };
        if let Some(f) = fixtures {
            cfg.backend.kind = narrative_core::config::BackendKind::Mock;
            cfg.backend.fixtures = Some(f);
        }
        let (backend, catalog) = cfg.build_backend().map_err(|e| err("config", e))?;
        let converter = cfg.build_converter().map_err(|e| err("config", e))?;
        let inner = CorePipeline::new(backend, converter, cfg.selector, cfg.pipeline).map_err(|e| err(e.code(), e))?;
        Ok(Self { inner, catalog })
    }

    fn images(&self) -> Vec<String> {
        self.catalog.ids().to_vec()
    }

    fn narrate<'py>(&self, py: Python<'py>, image_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let image = self.image(image_id)?;
        let n = py.detach(|| self.inner.narrate_auto(image)).map_err(|e| err(e.code(), e))?;
        to_py(py, &n)
    }

    /// The question to put to a person, with its choices.
    fn question<'py>(&self, py: Python<'py>, image_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let image = self.image(image_id)?;
        let q = py.detach(|| self.inner.next_interactive_question(image)).map_err(|e| err(e.code(), e))?;
        to_py(py, &q)
    }

    /// Narrative driven by a person's answer to `question`.
    fn answer<'py>(&self, py: Python<'py>, image_id: &str, question: &str, answer: &str) -> PyResult<Bound<'py, PyAny>> {
        let image = self.image(image_id)?;
        let q = self.inner.converter().parse_question(question).map_err(|e| err(e.code(), e))?;
        let n = py
            .detach(|| {
                let label = self.inner.resolve_answer(image, &q, answer)?;
                self.inner.submit_answer(image, &q, &label)
            })
            .map_err(|e| err(e.code(), e))?;
        to_py(py, &n)
    }
}

/// Session service with its event log in `config`'s `service.log_dir`.
#[pyclass(frozen)]
struct Service {
    inner: Arc<CoreService>,
}

#[pymethods]
impl Service {
    #[new]
    #[pyo3(signature = (config=None, log_dir=None))]
    fn new(config: Option<PathBuf>, log_dir: Option<PathBuf>) -> PyResult<Self> {
        let mut cfg = match config {
            Some(p) => AppConfig::load(&p).map_err(|e| err("config", e))?,
            None => AppConfig::default(),
        };
        if let Some(d) = log_dir {
            cfg.service.log_dir = d;
        }
        let inner = CoreService::from_config(&cfg).map_err(service_err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    fn create_session<'py>(&self, py: Python<'py>, user_id: &str, image_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let v = py.detach(|| self.inner.create_session(user_id, image_id)).map_err(service_err)?;
        to_py(py, &v)
    }

    fn get_session<'py>(&self, py: Python<'py>, session_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.get_session(session_id).map_err(service_err)?)
    }

    #[pyo3(signature = (session_id, answer, request_id=None))]
    fn post_answer<'py>(&self, py: Python<'py>, session_id: &str, answer: &str, request_id: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let r = py.detach(|| self.inner.post_answer(session_id, answer, request_id)).map_err(service_err)?;
        to_py(py, &r)
    }

    fn show_question<'py>(&self, py: Python<'py>, session_id: &str, image_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let v = py.detach(|| self.inner.show_question(session_id, image_id)).map_err(service_err)?;
        to_py(py, &v)
    }

    #[pyo3(signature = (session_id, image_id, request_id=None))]
    fn personalize<'py>(&self, py: Python<'py>, session_id: &str, image_id: &str, request_id: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let r = py.detach(|| self.inner.personalize(session_id, image_id, request_id)).map_err(service_err)?;
        to_py(py, &r)
    }

    #[pyo3(signature = (user_id=None))]
    fn choices<'py>(&self, py: Python<'py>, user_id: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.choices(user_id).map_err(service_err)?)
    }
}

/// Linear softmax model over (prior choice, image, question) features.
#[pyclass(frozen)]
struct PreferenceModel {
    inner: CoreModel,
}

#[pymethods]
impl PreferenceModel {
    /// Trains on the ordered same-user pairs of a choice log.
    #[staticmethod]
    #[pyo3(signature = (log, epochs=300, learning_rate=0.5, seed=0))]
    fn train_from_log(py: Python<'_>, log: PathBuf, epochs: usize, learning_rate: f64, seed: u64) -> PyResult<Self> {
        let records = preference::log::read(&log, None).map_err(|e| err("choice-log", e))?;
        let pairs = build_pairs(&records);
        let cfg = TrainConfig {
            epochs,
            learning_rate,
            seed,
            ..TrainConfig::default()
        };
        let inner = py.detach(|| preference::train(&pairs, &cfg)).map_err(|e| err("train", e))?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CoreModel::load(&path).map_err(|e| err("model-file", e))?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(|e| err("model-file", e))
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size
    }

    /// Accuracy on the ordered pairs of a choice log.
    fn accuracy(&self, log: PathBuf) -> PyResult<f64> {
        let records = preference::log::read(&log, None).map_err(|e| err("choice-log", e))?;
        let report = preference::evaluate(&self.inner, &build_pairs(&records)).map_err(|e| err("evaluate", e))?;
        Ok(report.accuracy)
    }
}

/// Strict-threshold eligibility of an answer distribution.
#[pyfunction]
#[pyo3(signature = (probs, qtype, alpha=0.33))]
fn is_eligible(probs: Vec<f64>, qtype: &str, alpha: f64) -> PyResult<bool> {
    let vocab = Arc::new(Vocabulary::synthetic(probs.len()));
    let dist = AnswerDistribution::new(vocab, probs).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let cfg = EligibilityConfig {
        alpha_threshold: alpha,
        ..EligibilityConfig::default()
    };
    Ok(selector::is_eligible(&dist, parse_qtype(qtype)?, &cfg))
}

/// Box grown by `alpha` of its size on every side, clamped to the image.
#[pyfunction]
fn magnify_box(bbox: (f64, f64, f64, f64), dims: (f64, f64), alpha: f64) -> PyResult<(f64, f64, f64, f64)> {
    let m = selector::magnify_box(&raw_box(bbox)?, dims, alpha).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((m.x0, m.y0, m.xmax, m.ymax))
}

/// Cumulative BLEU-1..max_n of one candidate against references, 0-100.
#[pyfunction]
#[pyo3(signature = (candidate, references, max_n=4))]
fn bleu(candidate: Vec<String>, references: Vec<String>, max_n: usize) -> PyResult<Vec<f64>> {
    evalkit::bleu(&candidate, &references, max_n)
        .map(|s| s.scores)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Synthetic preference benchmark; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (users=50, choices=10, seed=0))]
fn preference_benchmark<'py>(py: Python<'py>, users: usize, choices: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = BenchmarkConfig {
        users,
        choices_per_user: choices,
        seed,
        ..BenchmarkConfig::default()
    };
    let report = py
        .detach(|| {
            let records = evalkit::synthetic_population(&cfg)?;
            evalkit::run_preference_benchmark(&records, &cfg)
        })
        .map_err(|e| err("benchmark", e))?;
    to_py(py, &report)
}

#[pymodule]
fn narrative(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NarrativeError", m.py().get_type::<NarrativeError>())?;
    m.add_class::<Converter>()?;
    m.add_class::<Pipeline>()?;
    m.add_class::<Service>()?;
    m.add_class::<PreferenceModel>()?;
    m.add_function(wrap_pyfunction!(is_eligible, m)?)?;
    m.add_function(wrap_pyfunction!(magnify_box, m)?)?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(preference_benchmark, m)?)?;
    Ok(())
}
