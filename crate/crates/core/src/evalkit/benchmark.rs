//! Desk-scale preference benchmark: same-user pairs against pairs with the
//! source decision taken from a different user, and against a model that
//! never sees question features.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::synthetic::{simulate_users, PreferenceRule, SyntheticItem, SyntheticUserSpec};
use super::EvalError;
use crate::backends::FeatureVector;
use crate::preference::{build_pairs, evaluate, train, ChoiceRecord, Pair, QuestionEncoder, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub users: usize,
    pub choices_per_user: usize,
    pub vocab_size: usize,
    /// Question categories; the vocabulary is split evenly between them.
    pub categories: usize,
    pub noise: f64,
    pub image_dim: usize,
    pub question_dim: usize,
    /// Cross-validation folds over users.
    pub folds: usize,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            users: 50,
            choices_per_user: 10,
            vocab_size: 10,
            categories: 2,
            noise: 0.1,
            image_dim: 8,
            question_dim: 16,
            folds: 5,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMetadata {
    pub users: usize,
    pub records: usize,
    pub pairs: usize,
    /// Number of users keyed by their ordered-pair count.
    pub pairs_per_user: BTreeMap<String, usize>,
    pub vocab_size: usize,
    pub folds: usize,
    pub fold_unit: String,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub fusion: String,
    pub shuffled_protocol: String,
    pub question_zeroed_protocol: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub metadata: BenchmarkMetadata,
    pub consistent_acc: f64,
    pub shuffled_acc: f64,
    /// Model trained and tested with every question feature zeroed.
    pub image_only_acc: f64,
    pub consistent_minus_shuffled: f64,
    pub consistent_minus_image_only: f64,
    pub chance: f64,
    pub per_fold: Vec<FoldResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_pairs: usize,
    pub consistent_acc: f64,
    pub shuffled_acc: f64,
    pub image_only_acc: f64,
}

impl BenchmarkReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

const CATEGORY_QUESTIONS: &[&[&str]] = &[
    &["What animal is this?", "Which animal do you see?"],
    &["What color is the shirt?", "Which color stands out?"],
    &["What food is on the table?", "Which dish looks good?"],
    &["What sport is being played?", "Which game are they playing?"],
];

fn random_feature(rng: &mut ChaCha8Rng, dim: usize) -> FeatureVector {
    FeatureVector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite")
}

/// Users of `vocab_size / categories` types; a user of type `t` picks label
/// `c * (vocab_size / categories) + t` for questions of category `c`.
pub fn synthetic_population(cfg: &BenchmarkConfig) -> Result<Vec<ChoiceRecord>, EvalError> {
    if cfg.categories == 0 || cfg.categories > CATEGORY_QUESTIONS.len() {
        return Err(EvalError::Invalid(format!("categories must be 1..={}", CATEGORY_QUESTIONS.len())));
    }
    let per = cfg.vocab_size / cfg.categories;
    if per == 0 {
        return Err(EvalError::Invalid("vocabulary smaller than the number of categories".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let encoder = QuestionEncoder::new(cfg.question_dim);
    let pool = cfg.users * cfg.choices_per_user;
    let items: Vec<SyntheticItem> = (0..pool)
        .map(|i| {
            let category = i % cfg.categories;
            let qs = CATEGORY_QUESTIONS[category];
            let question = qs[rng.random_range(0..qs.len())].to_string();
            SyntheticItem {
                image_id: format!("synthetic-{i:05}"),
                image_feature: random_feature(&mut rng, cfg.image_dim),
                question_feature: encoder.encode(&question),
                question,
                category,
            }
        })
        .collect();
    let specs: Vec<SyntheticUserSpec> = (0..cfg.users)
        .map(|u| {
            let t = u % per;
            SyntheticUserSpec {
                user_id: format!("user-{u:03}"),
                rule: PreferenceRule::ByCategory((0..cfg.categories).map(|c| c * per + t).collect()),
                noise: cfg.noise,
                seed: u as u64,
            }
        })
        .collect();
    simulate_users(&specs, &items, cfg.choices_per_user, cfg.vocab_size, cfg.seed)
}

fn zero_questions(pairs: &[Pair]) -> Vec<Pair> {
    pairs
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.source.question_feature = FeatureVector::zeros(p.source.question_feature.dim());
            p.target.question_feature = FeatureVector::zeros(p.target.question_feature.dim());
            p
        })
        .collect()
}

/// Replaces each source with a random record of a different user.
fn shuffle_sources(pairs: &[Pair], records: &[&ChoiceRecord], rng: &mut ChaCha8Rng) -> Vec<Pair> {
    pairs
        .iter()
        .map(|p| {
            let others: Vec<&&ChoiceRecord> = records.iter().filter(|r| r.user_id != p.target.user_id).collect();
            let source = (**others[rng.random_range(0..others.len())]).clone();
            Pair {
                source,
                target: p.target.clone(),
            }
        })
        .collect()
}

/// Cross-validated accuracies of the three models. Shuffled-source models are
/// trained on shuffled pairs and tested on same-user pairs.
pub fn run_preference_benchmark(records: &[ChoiceRecord], cfg: &BenchmarkConfig) -> Result<BenchmarkReport, EvalError> {
    let mut users: Vec<&str> = Vec::new();
    let mut by_user: BTreeMap<&str, Vec<&ChoiceRecord>> = BTreeMap::new();
    for r in records {
        let entry = by_user.entry(r.user_id.as_str()).or_default();
        if entry.is_empty() {
            users.push(r.user_id.as_str());
        }
        entry.push(r);
    }
    users.retain(|u| by_user[u].len() >= 2);
    let folds = cfg.folds.max(2);
    if users.len() < folds.max(3) {
        return Err(EvalError::InsufficientData(format!(
            "{} users with at least two choices; need {}",
            users.len(),
            folds.max(3)
        )));
    }
    let vocab_size = records[0].vocab_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xB5AD_4ECE_DA1C_E2A9);
    users.shuffle(&mut rng);

    let mut jobs = Vec::with_capacity(folds);
    for fold in 0..folds {
        let test_users: Vec<&str> = users.iter().enumerate().filter(|(i, _)| i % folds == fold).map(|(_, u)| *u).collect();
        let collect = |pick: &dyn Fn(&str) -> bool| -> Vec<ChoiceRecord> {
            users
                .iter()
                .filter(|u| pick(u))
                .flat_map(|u| by_user[u].iter().map(|r| (*r).clone()))
                .collect()
        };
        let train_recs = collect(&|u| !test_users.contains(&u));
        let test_recs = collect(&|u| test_users.contains(&u));
        let train_pairs = build_pairs(&train_recs);
        let test_pairs = build_pairs(&test_recs);
        let train_refs: Vec<&ChoiceRecord> = train_recs.iter().collect();
        let shuffled = shuffle_sources(&train_pairs, &train_refs, &mut rng);
        jobs.push((fold, train_pairs, shuffled, test_pairs));
    }

    let train_cfg = cfg.train;
    let results: Vec<Result<FoldResult, EvalError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(fold, train_pairs, shuffled, test_pairs)| {
                s.spawn(move || -> Result<FoldResult, EvalError> {
                    let full = train(train_pairs, &train_cfg)?;
                    let shuf = train(shuffled, &train_cfg)?;
                    let zeroed_train = zero_questions(train_pairs);
                    let zeroed_test = zero_questions(test_pairs);
                    let image_only = train(&zeroed_train, &train_cfg)?;
                    Ok(FoldResult {
                        fold: *fold,
                        test_pairs: test_pairs.len(),
                        consistent_acc: evaluate(&full, test_pairs)?.accuracy,
                        shuffled_acc: evaluate(&shuf, test_pairs)?.accuracy,
                        image_only_acc: evaluate(&image_only, &zeroed_test)?.accuracy,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("benchmark fold panicked")).collect()
    });
    let per_fold = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let total: usize = per_fold.iter().map(|f| f.test_pairs).sum();
    let weighted = |f: fn(&FoldResult) -> f64| per_fold.iter().map(|r| f(r) * r.test_pairs as f64).sum::<f64>() / total as f64;
    let consistent_acc = weighted(|r| r.consistent_acc);
    let shuffled_acc = weighted(|r| r.shuffled_acc);
    let image_only_acc = weighted(|r| r.image_only_acc);

    let mut pairs_per_user = BTreeMap::new();
    for u in &users {
        let n = by_user[u].len();
        *pairs_per_user.entry((n * (n - 1)).to_string()).or_insert(0) += 1;
    }
    Ok(BenchmarkReport {
        metadata: BenchmarkMetadata {
            users: users.len(),
            records: users.iter().map(|u| by_user[u].len()).sum(),
            pairs: total,
            pairs_per_user,
            vocab_size,
            folds,
            fold_unit: "user".into(),
            seed: cfg.seed,
            learning_rate: train_cfg.learning_rate,
            epochs: train_cfg.epochs,
            fusion: "concat".into(),
            shuffled_protocol: "train on pairs whose source is another user's record; test on same-user pairs".into(),
            question_zeroed_protocol: "question features zeroed in training and test pairs".into(),
        },
        consistent_acc,
        shuffled_acc,
        image_only_acc,
        consistent_minus_shuffled: consistent_acc - shuffled_acc,
        consistent_minus_image_only: consistent_acc - image_only_acc,
        chance: 1.0 / vocab_size as f64,
        per_fold,
    })
}
