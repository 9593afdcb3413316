//! Learning a user's answer preferences from their earlier choices.
//!
//! A user decision is stored as a [`ChoiceRecord`] (image feature, question
//! feature, chosen answer). Ordered pairs of decisions by the same user train
//! a softmax classifier that predicts the second answer from the first
//! decision plus the second image and question.

mod encoder;
pub mod log;
mod model;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, FeatureVector};

pub use encoder::QuestionEncoder;
pub use model::{evaluate, train, EvalReport, PreferenceModel, TrainConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PreferenceError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("answer index {index} outside a choice vocabulary of {size}")]
    AnswerOutOfRange { index: usize, size: usize },
    #[error("no training pairs")]
    NoPairs,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("choice log: {0}")]
    Log(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// One user decision. The answer is the hot index of a one-hot vector of
/// length `vocab_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub user_id: String,
    pub image_feature: FeatureVector,
    pub question_feature: FeatureVector,
    pub answer: usize,
    pub vocab_size: usize,
    /// Choice indices shown to the user, when the decision was a pick from a list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presented: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
}

impl ChoiceRecord {
    pub fn new(
        user_id: impl Into<String>,
        image_feature: FeatureVector,
        question_feature: FeatureVector,
        answer: usize,
        vocab_size: usize,
    ) -> Result<Self, PreferenceError> {
        let r = Self {
            user_id: user_id.into(),
            image_feature,
            question_feature,
            answer,
            vocab_size,
            presented: None,
            image_id: None,
            question: None,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), PreferenceError> {
        if self.answer >= self.vocab_size {
            return Err(PreferenceError::AnswerOutOfRange {
                index: self.answer,
                size: self.vocab_size,
            });
        }
        if let Some(bad) = self.presented.iter().flatten().find(|&&i| i >= self.vocab_size) {
            return Err(PreferenceError::AnswerOutOfRange {
                index: *bad,
                size: self.vocab_size,
            });
        }
        Ok(())
    }

    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.vocab_size];
        v[self.answer] = 1.0;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    #[default]
    Concat,
}

/// Fused representation of a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceVector(pub FeatureVector);

impl ChoiceVector {
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
}

pub fn fused_dim(fusion: Fusion, image_dim: usize, question_dim: usize, vocab_size: usize) -> usize {
    match fusion {
        Fusion::Concat => image_dim + question_dim + vocab_size,
    }
}

pub fn build_choice_vector(record: &ChoiceRecord, fusion: Fusion) -> Result<ChoiceVector, PreferenceError> {
    record.validate()?;
    let values = match fusion {
        Fusion::Concat => {
            let mut v = Vec::with_capacity(fused_dim(
                fusion,
                record.image_feature.dim(),
                record.question_feature.dim(),
                record.vocab_size,
            ));
            v.extend_from_slice(record.image_feature.values());
            v.extend_from_slice(record.question_feature.values());
            v.extend(record.one_hot());
            v
        }
    };
    Ok(ChoiceVector(FeatureVector::new(values)?))
}

/// Training example: what the user chose before, and the decision to predict.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub source: ChoiceRecord,
    pub target: ChoiceRecord,
}

/// All ordered pairs of distinct records within each user, users in order of
/// first appearance. Users with fewer than two records are skipped.
pub fn build_pairs(records: &[ChoiceRecord]) -> Vec<Pair> {
    let mut by_user: Vec<(&str, Vec<&ChoiceRecord>)> = Vec::new();
    let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        let i = *slot.entry(r.user_id.as_str()).or_insert_with(|| {
            by_user.push((r.user_id.as_str(), Vec::new()));
            by_user.len() - 1
        });
        by_user[i].1.push(r);
    }
    let mut pairs = Vec::new();
    for (user, recs) in by_user {
        if recs.len() < 2 {
            ::log::warn!("user {user:?} has {} choice record(s); need 2 to form pairs", recs.len());
            continue;
        }
        for (i, a) in recs.iter().enumerate() {
            for (j, b) in recs.iter().enumerate() {
                if i != j {
                    pairs.push(Pair {
                        source: (*a).clone(),
                        target: (*b).clone(),
                    });
                }
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, answer: usize) -> ChoiceRecord {
        ChoiceRecord::new(
            user,
            FeatureVector::new(vec![0.0; 4]).unwrap(),
            FeatureVector::new(vec![0.0; 4]).unwrap(),
            answer,
            3,
        )
        .unwrap()
    }

    #[test]
    fn concat_fusion() {
        let v = build_choice_vector(&rec("u", 1), Fusion::Concat).unwrap();
        assert_eq!(v.dim(), 11);
        let mut expected = [0.0; 11];
        expected[9] = 1.0;
        assert_eq!(v.values(), &expected[..]);
        assert_eq!(v, build_choice_vector(&rec("u", 1), Fusion::Concat).unwrap());
    }

    #[test]
    fn answer_index_is_checked() {
        let mut r = rec("u", 0);
        r.answer = 3;
        assert!(matches!(build_choice_vector(&r, Fusion::Concat), Err(PreferenceError::AnswerOutOfRange { .. })));
    }

    #[test]
    fn pair_counts() {
        let ten: Vec<_> = (0..10).map(|i| rec("a", i % 3)).collect();
        assert_eq!(build_pairs(&ten).len(), 90);
        let two = vec![rec("a", 0), rec("a", 1)];
        let pairs = build_pairs(&two);
        assert_eq!(pairs.len(), 2);
        assert_eq!((pairs[0].source.answer, pairs[0].target.answer), (0, 1));
        assert_eq!((pairs[1].source.answer, pairs[1].target.answer), (1, 0));
        let mixed = vec![rec("a", 0), rec("b", 1), rec("a", 2), rec("c", 0)];
        let pairs = build_pairs(&mixed);
        assert_eq!(pairs.len(), 2);
        assert!(pairs.iter().all(|p| p.source.user_id == p.target.user_id));
    }
}
