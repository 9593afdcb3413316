//! TOML application config shared by the CLI, the service and the Python
//! bindings.
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backends::{Backend, Fixture, ImageCatalog, ImageRef, MockBackend, RemoteBackend, RemoteConfig, Vocabulary};
use crate::converter::{Converter, RuleTable, Tagger};
use crate::pipeline::PipelineConfig;
use crate::preference::TrainConfig;
use crate::selector::SelectorConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Backend(#[from] crate::backends::BackendError),
    #[error(transparent)]
    Convert(#[from] crate::converter::ConvertError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    /// Mock fixture file. For the remote backend it also serves as the image
    /// catalog when `catalog` is unset.
    pub fixtures: Option<PathBuf>,
    /// JSON array of images (`id`, `width`, `height`, `feature`).
    pub catalog: Option<PathBuf>,
    pub base_url: String,
    pub deadline_ms: u64,
    pub max_in_flight: usize,
    pub feature_dim: usize,
    /// One label per line.
    pub vocab_file: Option<PathBuf>,
}

impl Default for BackendSection {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            fixtures: None,
            catalog: None,
            base_url: "http://127.0.0.1:9000".into(),
            deadline_ms: 2000,
            max_in_flight: 8,
            feature_dim: 8,
            vocab_file: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConverterSection {
    /// Replaces the built-in rule table.
    pub rules: Option<PathBuf>,
    /// Extra lexicon entries layered over the built-in lexicon.
    pub lexicon: Option<PathBuf>,
    /// Sentence used when no rule matches, e.g. `"{question}: {answer}"`.
    pub fallback_template: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub listen: String,
    pub log_dir: PathBuf,
    pub model_path: Option<PathBuf>,
    /// Events between snapshots of the session table.
    pub snapshot_every: usize,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            log_dir: PathBuf::from("var"),
            model_path: None,
            snapshot_every: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub backend: BackendSection,
    pub converter: ConverterSection,
    pub selector: SelectorConfig,
    pub pipeline: PipelineConfig,
    pub preference: TrainConfig,
    pub service: ServiceSection,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let mut cfg: AppConfig = toml::from_str(&read(path)?).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        };
        fix(&mut self.backend.fixtures);
        fix(&mut self.backend.catalog);
        fix(&mut self.backend.vocab_file);
        fix(&mut self.converter.rules);
        fix(&mut self.converter.lexicon);
        fix(&mut self.service.model_path);
        if self.service.log_dir.is_relative() {
            self.service.log_dir = dir.join(&self.service.log_dir);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.selector.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.pipeline.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let p = &self.preference;
        if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
            return Err(ConfigError::Invalid(format!("preference.learning_rate must be positive, got {}", p.learning_rate)));
        }
        if p.epochs == 0 {
            return Err(ConfigError::Invalid("preference.epochs must be positive".into()));
        }
        if self.backend.kind == BackendKind::Remote {
            if self.backend.vocab_file.is_none() {
                return Err(ConfigError::Invalid("remote backend needs backend.vocab_file".into()));
            }
            if self.backend.catalog.is_none() && self.backend.fixtures.is_none() {
                return Err(ConfigError::Invalid("remote backend needs backend.catalog or backend.fixtures".into()));
            }
            if self.backend.max_in_flight == 0 || self.backend.deadline_ms == 0 {
                return Err(ConfigError::Invalid("backend.max_in_flight and backend.deadline_ms must be positive".into()));
            }
        }
        if self.service.snapshot_every == 0 {
            return Err(ConfigError::Invalid("service.snapshot_every must be positive".into()));
        }
        Ok(())
    }

    pub fn build_converter(&self) -> Result<Converter, ConfigError> {
        let mut tagger = Tagger::builtin();
        if let Some(path) = &self.converter.lexicon {
            tagger.extend_lexicon(&read(path)?)?;
        }
        let rules = match &self.converter.rules {
            Some(path) => RuleTable::load(path)?,
            None => RuleTable::builtin(),
        };
        let converter = Converter::new(tagger, rules);
        Ok(match &self.converter.fallback_template {
            Some(t) => converter.with_fallback(t.clone()),
            None => converter,
        })
    }

    /// The configured backend and the images it can serve.
    pub fn build_backend(&self) -> Result<(Arc<dyn Backend>, ImageCatalog), ConfigError> {
        let b = &self.backend;
        match b.kind {
            BackendKind::Mock => {
                let path = b
                    .fixtures
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("mock backend needs backend.fixtures".into()))?;
                let mock = MockBackend::load(path)?;
                let catalog = mock.catalog().clone();
                Ok((Arc::new(mock), catalog))
            }
            BackendKind::Remote => {
                let vocab_path = b.vocab_file.as_ref().expect("validated");
                let labels = read(vocab_path)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect();
                let vocab = Arc::new(Vocabulary::new(labels)?);
                let catalog = match (&b.catalog, &b.fixtures) {
                    (Some(path), _) => {
                        let images: Vec<ImageRef> = serde_json::from_str(&read(path)?).map_err(|e| ConfigError::Parse {
                            path: path.clone(),
                            message: e.to_string(),
                        })?;
                        let mut catalog = ImageCatalog::default();
                        for img in images {
                            img.feature.expect_dim(b.feature_dim)?;
                            catalog.insert(img)?;
                        }
                        catalog
                    }
                    (None, Some(path)) => Fixture::load(path)?.catalog()?,
                    (None, None) => unreachable!("validated"),
                };
                let remote = RemoteBackend::new(
                    RemoteConfig {
                        base_url: b.base_url.clone(),
                        deadline: Duration::from_millis(b.deadline_ms),
                        max_in_flight: b.max_in_flight,
                        feature_dim: b.feature_dim,
                    },
                    vocab,
                );
                Ok((Arc::new(remote), catalog))
            }
        }
    }
}
