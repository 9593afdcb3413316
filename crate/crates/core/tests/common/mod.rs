#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use narrative_core::backends::{ImageCatalog, MockBackend};
use narrative_core::converter::Converter;
use narrative_core::pipeline::{Pipeline, PipelineConfig};
use narrative_core::selector::SelectorConfig;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn demo_fixture() -> PathBuf {
    repo_root().join("fixtures/demo.json")
}

pub fn demo_pipeline() -> (Pipeline, ImageCatalog) {
    let mock = MockBackend::load(demo_fixture()).expect("demo fixture loads");
    let catalog = mock.catalog().clone();
    let pipeline = Pipeline::new(Arc::new(mock), Converter::builtin(), SelectorConfig::default(), PipelineConfig::default())
        .expect("default config is valid");
    (pipeline, catalog)
}
