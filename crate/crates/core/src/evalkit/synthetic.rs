//! Simulated users whose choices follow a fixed rule with random deviations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::backends::FeatureVector;
use crate::preference::ChoiceRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceRule {
    /// Always the same label.
    Always(usize),
    /// Label chosen per question category, indexed by category.
    ByCategory(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUserSpec {
    pub user_id: String,
    pub rule: PreferenceRule,
    /// Probability of answering uniformly at random instead of by rule.
    pub noise: f64,
    pub seed: u64,
}

/// An (image, question) prompt a synthetic user can answer.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticItem {
    pub image_id: String,
    pub image_feature: FeatureVector,
    pub question: String,
    pub question_feature: FeatureVector,
    pub category: usize,
}

impl SyntheticUserSpec {
    pub fn validate(&self, vocab_size: usize, categories: usize) -> Result<(), EvalError> {
        if !(0.0..1.0).contains(&self.noise) {
            return Err(EvalError::Invalid(format!("user {}: noise must be in [0, 1), got {}", self.user_id, self.noise)));
        }
        let labels: &[usize] = match &self.rule {
            PreferenceRule::Always(l) => std::slice::from_ref(l),
            PreferenceRule::ByCategory(ls) => {
                if ls.len() < categories {
                    return Err(EvalError::Invalid(format!(
                        "user {}: rule covers {} of {categories} categories",
                        self.user_id,
                        ls.len()
                    )));
                }
                ls
            }
        };
        if let Some(bad) = labels.iter().find(|&&l| l >= vocab_size) {
            return Err(EvalError::Invalid(format!("user {}: label {bad} outside vocabulary of {vocab_size}", self.user_id)));
        }
        Ok(())
    }

    pub fn rule_label(&self, category: usize) -> usize {
        match &self.rule {
            PreferenceRule::Always(l) => *l,
            PreferenceRule::ByCategory(ls) => ls[category],
        }
    }
}

fn user_rng(seed: u64, spec: &SyntheticUserSpec) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Each user answers `items_per_user` distinct items drawn from `items`.
/// Output is grouped by user in spec order and fully determined by `seed`.
pub fn simulate_users(
    specs: &[SyntheticUserSpec],
    items: &[SyntheticItem],
    items_per_user: usize,
    vocab_size: usize,
    seed: u64,
) -> Result<Vec<ChoiceRecord>, EvalError> {
    if items_per_user > items.len() {
        return Err(EvalError::Invalid(format!("{items_per_user} items per user from a pool of {}", items.len())));
    }
    let categories = items.iter().map(|i| i.category + 1).max().unwrap_or(0);
    let mut out = Vec::with_capacity(specs.len() * items_per_user);
    for spec in specs {
        spec.validate(vocab_size, categories)?;
        let mut rng = user_rng(seed, spec);
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order[..items_per_user] {
            let item = &items[i];
            let answer = if rng.random::<f64>() < spec.noise {
                rng.random_range(0..vocab_size)
            } else {
                spec.rule_label(item.category)
            };
            let mut rec = ChoiceRecord::new(
                spec.user_id.clone(),
                item.image_feature.clone(),
                item.question_feature.clone(),
                answer,
                vocab_size,
            )
            .map_err(|e| EvalError::Invalid(e.to_string()))?;
            rec.image_id = Some(item.image_id.clone());
            rec.question = Some(item.question.clone());
            out.push(rec);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize) -> Vec<SyntheticItem> {
        (0..n)
            .map(|i| SyntheticItem {
                image_id: format!("img{i}"),
                image_feature: FeatureVector::new(vec![i as f64, 1.0]).unwrap(),
                question: "What is this?".into(),
                question_feature: FeatureVector::new(vec![1.0, 0.0]).unwrap(),
                category: 0,
            })
            .collect()
    }

    fn user(rule: PreferenceRule, noise: f64) -> SyntheticUserSpec {
        SyntheticUserSpec {
            user_id: "u".into(),
            rule,
            noise,
            seed: 1,
        }
    }

    #[test]
    fn noiseless_rule_is_followed() {
        let recs = simulate_users(&[user(PreferenceRule::Always(2), 0.0)], &items(20), 20, 5, 3).unwrap();
        assert_eq!(recs.len(), 20);
        assert!(recs.iter().all(|r| r.answer == 2));
    }

    #[test]
    fn same_seed_same_stream() {
        let specs = [user(PreferenceRule::Always(1), 0.3)];
        let a = simulate_users(&specs, &items(30), 10, 4, 9).unwrap();
        assert_eq!(a, simulate_users(&specs, &items(30), 10, 4, 9).unwrap());
        assert_ne!(a, simulate_users(&specs, &items(30), 10, 4, 10).unwrap());
    }

    #[test]
    fn invalid_specs() {
        assert!(simulate_users(&[user(PreferenceRule::Always(5), 0.0)], &items(3), 3, 5, 0).is_err());
        assert!(simulate_users(&[user(PreferenceRule::Always(0), 1.0)], &items(3), 3, 5, 0).is_err());
        assert!(simulate_users(&[user(PreferenceRule::ByCategory(vec![]), 0.0)], &items(3), 3, 5, 0).is_err());
        assert!(simulate_users(&[user(PreferenceRule::Always(0), 0.0)], &items(3), 4, 5, 0).is_err());
    }
}
