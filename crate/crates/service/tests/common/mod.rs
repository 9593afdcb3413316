#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use narrative_core::backends::{ImageCatalog, MockBackend};
use narrative_core::converter::Converter;
use narrative_core::pipeline::{Pipeline, PipelineConfig};
use narrative_core::preference::TrainConfig;
use narrative_core::selector::SelectorConfig;
use narrative_service::store::SessionStore;
use narrative_service::{Service, ServiceError};

pub fn demo_fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo.json")
}

/// Images of the demo fixture that open with a question.
pub const QUESTION_IMAGES: &[&str] = &["kitchen", "street", "zoo", "safari", "savanna", "park"];

pub fn demo_pipeline() -> (Pipeline, ImageCatalog) {
    let mock = MockBackend::load(demo_fixture()).expect("demo fixture loads");
    let catalog = mock.catalog().clone();
    let pipeline = Pipeline::new(Arc::new(mock), Converter::builtin(), SelectorConfig::default(), PipelineConfig::default())
        .expect("default config is valid");
    (pipeline, catalog)
}

pub fn demo_service_with(dir: &Path, snapshot_every: usize) -> Service {
    let (pipeline, catalog) = demo_pipeline();
    let store = SessionStore::open(dir, snapshot_every).expect("store opens");
    Service::new(pipeline, catalog, store, TrainConfig::default())
}

pub fn demo_service(dir: &Path) -> Service {
    demo_service_with(dir, 100)
}

pub const ALL_IMAGES: &[&str] = &["kitchen", "street", "zoo", "safari", "savanna", "bakery", "porch", "park"];

/// Drives `n` sessions through a seeded mix of questions, answers, retried
/// requests, invalid answers and personalization. Returns the session ids.
pub fn random_sessions(s: &Service, n: usize, seed: u64) -> Vec<String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let user = format!("user-{}", rng.random_range(0..12));
        let image = ALL_IMAGES[rng.random_range(0..ALL_IMAGES.len())];
        let id = s.create_session(&user, image).expect("create").id;
        let mut last_request: Option<String> = None;
        for step in 0..rng.random_range(0..5) {
            let view = s.get_session(&id).expect("session exists");
            match rng.random_range(0..5) {
                0 | 1 => {
                    if let Some(q) = view.question {
                        let label = &q.choices[rng.random_range(0..q.choices.len())];
                        let rid = format!("r-{i}-{step}");
                        s.post_answer(&id, label, Some(&rid)).expect("answer");
                        last_request = Some(rid);
                    }
                }
                2 => {
                    let image = QUESTION_IMAGES[rng.random_range(0..QUESTION_IMAGES.len())];
                    s.show_question(&id, image).expect("question");
                }
                3 => {
                    if let Some(rid) = &last_request {
                        s.post_answer(&id, "whatever", Some(rid)).expect("retry");
                    } else {
                        let _ = s.post_answer(&id, "nonsense answer", None);
                    }
                }
                _ => {
                    let image = QUESTION_IMAGES[rng.random_range(0..QUESTION_IMAGES.len())];
                    match s.personalize(&id, image, None) {
                        Ok(_) | Err(ServiceError::NoPriorChoice(_)) | Err(ServiceError::ModelNotLoaded) => {}
                        Err(e) => panic!("personalize failed: {e}"),
                    }
                }
            }
        }
        ids.push(id);
    }
    ids
}
