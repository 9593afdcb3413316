//! Desk-scale evaluation: BLEU, simulated users and the preference benchmark.

pub mod benchmark;
pub mod bleu;
pub mod synthetic;

pub use benchmark::{run_preference_benchmark, synthetic_population, BenchmarkConfig, BenchmarkReport};
pub use bleu::{bleu, corpus_bleu, BleuScores, Segment};
pub use synthetic::{simulate_users, PreferenceRule, SyntheticItem, SyntheticUserSpec};

use crate::preference::PreferenceError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
}
