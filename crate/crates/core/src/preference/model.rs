use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_choice_vector, fused_dim, ChoiceRecord, ChoiceVector, Fusion, Pair, PreferenceError};
use crate::backends::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub fusion: Fusion,
    /// Initial weights are drawn uniformly from `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 300,
            seed: 0,
            fusion: Fusion::Concat,
            init_scale: 0.01,
        }
    }
}

/// Linear softmax classifier over the choice vocabulary. Input is the
/// source choice vector followed by the target image and question features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceModel {
    pub image_dim: usize,
    pub question_dim: usize,
    pub vocab_size: usize,
    pub fusion: Fusion,
    pub seed: u64,
    /// Row-major `vocab_size x input_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Lowest index among the maxima.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl PreferenceModel {
    pub fn zeros(image_dim: usize, question_dim: usize, vocab_size: usize, fusion: Fusion) -> Result<Self, PreferenceError> {
        if vocab_size < 2 {
            return Err(PreferenceError::InvalidConfig(format!("choice vocabulary needs >= 2 labels, got {vocab_size}")));
        }
        let input = fused_dim(fusion, image_dim, question_dim, vocab_size) + image_dim + question_dim;
        Ok(Self {
            image_dim,
            question_dim,
            vocab_size,
            fusion,
            seed: 0,
            weights: vec![0.0; vocab_size * input],
            bias: vec![0.0; vocab_size],
        })
    }

    pub fn input_dim(&self) -> usize {
        fused_dim(self.fusion, self.image_dim, self.question_dim, self.vocab_size) + self.image_dim + self.question_dim
    }

    pub fn choice_dim(&self) -> usize {
        fused_dim(self.fusion, self.image_dim, self.question_dim, self.vocab_size)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Weights then biases, as one flat vector.
    pub fn parameters(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<(), PreferenceError> {
        let nw = self.weights.len();
        if params.len() != nw + self.bias.len() {
            return Err(PreferenceError::Dimension {
                what: "parameters",
                expected: nw + self.bias.len(),
                got: params.len(),
            });
        }
        self.weights.copy_from_slice(&params[..nw]);
        self.bias.copy_from_slice(&params[nw..]);
        Ok(())
    }

    fn check(&self, what: &'static str, expected: usize, got: usize) -> Result<(), PreferenceError> {
        if expected == got {
            Ok(())
        } else {
            Err(PreferenceError::Dimension { what, expected, got })
        }
    }

    /// Model input for predicting a new decision after `choice`.
    pub fn input(&self, choice: &ChoiceVector, image: &FeatureVector, question: &FeatureVector) -> Result<Vec<f64>, PreferenceError> {
        self.check("choice vector", self.choice_dim(), choice.dim())?;
        self.check("image feature", self.image_dim, image.dim())?;
        self.check("question feature", self.question_dim, question.dim())?;
        let mut x = Vec::with_capacity(self.input_dim());
        x.extend_from_slice(choice.values());
        x.extend_from_slice(image.values());
        x.extend_from_slice(question.values());
        Ok(x)
    }

    pub fn pair_input(&self, pair: &Pair) -> Result<Vec<f64>, PreferenceError> {
        self.check("target vocabulary", self.vocab_size, pair.target.vocab_size)?;
        let c = build_choice_vector(&pair.source, self.fusion)?;
        self.input(&c, &pair.target.image_feature, &pair.target.question_feature)
    }

    fn probabilities_of(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut z: Vec<f64> = (0..self.vocab_size)
            .map(|v| {
                let row = &self.weights[v * d..(v + 1) * d];
                row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.bias[v]
            })
            .collect();
        softmax_in_place(&mut z);
        z
    }

    /// Most likely answer index (lowest index on ties) and the full distribution.
    pub fn predict_choice(
        &self,
        choice: &ChoiceVector,
        image: &FeatureVector,
        question: &FeatureVector,
    ) -> Result<(usize, Vec<f64>), PreferenceError> {
        let x = self.input(choice, image, question)?;
        let p = self.probabilities_of(&x);
        Ok((argmax(&p), p))
    }

    pub fn predict_from_record(
        &self,
        prior: &ChoiceRecord,
        image: &FeatureVector,
        question: &FeatureVector,
    ) -> Result<(usize, Vec<f64>), PreferenceError> {
        let c = build_choice_vector(prior, self.fusion)?;
        self.predict_choice(&c, image, question)
    }

    fn prepared(&self, pairs: &[Pair]) -> Result<(Vec<Vec<f64>>, Vec<usize>), PreferenceError> {
        let xs = pairs.iter().map(|p| self.pair_input(p)).collect::<Result<Vec<_>, _>>()?;
        let ys = pairs.iter().map(|p| p.target.answer).collect();
        Ok((xs, ys))
    }

    /// Mean cross-entropy of the target answers.
    pub fn loss(&self, pairs: &[Pair]) -> Result<f64, PreferenceError> {
        let (xs, ys) = self.prepared(pairs)?;
        Ok(self.loss_prepared(&xs, &ys))
    }

    fn loss_prepared(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let total: f64 = xs.iter().zip(ys).map(|(x, &y)| -self.probabilities_of(x)[y].ln()).sum();
        total / xs.len() as f64
    }

    /// Gradient of [`Self::loss`] in the layout of [`Self::parameters`].
    pub fn gradient(&self, pairs: &[Pair]) -> Result<Vec<f64>, PreferenceError> {
        let (xs, ys) = self.prepared(pairs)?;
        let mut g = vec![0.0; self.weights.len() + self.bias.len()];
        self.accumulate_gradient(&xs, &ys, &mut g);
        Ok(g)
    }

    fn accumulate_gradient(&self, xs: &[Vec<f64>], ys: &[usize], g: &mut [f64]) -> f64 {
        g.iter_mut().for_each(|v| *v = 0.0);
        let d = self.input_dim();
        let nw = self.weights.len();
        let scale = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let mut p = self.probabilities_of(x);
            loss -= p[y].ln();
            p[y] -= 1.0;
            for (v, dv) in p.iter().enumerate() {
                let e = dv * scale;
                let row = &mut g[v * d..(v + 1) * d];
                for (gi, xi) in row.iter_mut().zip(x) {
                    *gi += e * xi;
                }
                g[nw + v] += e;
            }
        }
        loss * scale
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PreferenceError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| PreferenceError::ModelFile(e.to_string()))?;
        std::fs::write(path.as_ref(), text).map_err(|e| PreferenceError::ModelFile(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PreferenceError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| PreferenceError::ModelFile(format!("{}: {e}", path.as_ref().display())))?;
        let model: Self = serde_json::from_str(&text).map_err(|e| PreferenceError::ModelFile(e.to_string()))?;
        if model.weights.len() != model.vocab_size * model.input_dim() || model.bias.len() != model.vocab_size {
            return Err(PreferenceError::ModelFile("weight shapes do not match the recorded dimensions".into()));
        }
        Ok(model)
    }
}

/// Full-batch gradient descent on mean cross-entropy.
pub fn train(pairs: &[Pair], cfg: &TrainConfig) -> Result<PreferenceModel, PreferenceError> {
    let first = pairs.first().ok_or(PreferenceError::NoPairs)?;
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(PreferenceError::InvalidConfig(format!("learning_rate must be positive, got {}", cfg.learning_rate)));
    }
    let mut model = PreferenceModel::zeros(
        first.target.image_feature.dim(),
        first.target.question_feature.dim(),
        first.target.vocab_size,
        cfg.fusion,
    )?;
    model.seed = cfg.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if cfg.init_scale > 0.0 {
        for w in model.weights.iter_mut() {
            *w = rng.random_range(-cfg.init_scale..=cfg.init_scale);
        }
    }
    let (xs, ys) = model.prepared(pairs)?;
    let mut g = vec![0.0; model.weights.len() + model.bias.len()];
    let nw = model.weights.len();
    for epoch in 0..cfg.epochs {
        let loss = model.accumulate_gradient(&xs, &ys, &mut g);
        if !loss.is_finite() {
            return Err(PreferenceError::Diverged { epoch, loss });
        }
        for (w, gi) in model.weights.iter_mut().zip(&g[..nw]) {
            *w -= cfg.learning_rate * gi;
        }
        for (b, gi) in model.bias.iter_mut().zip(&g[nw..]) {
            *b -= cfg.learning_rate * gi;
        }
    }
    let final_loss = model.loss_prepared(&xs, &ys);
    if !final_loss.is_finite() {
        return Err(PreferenceError::Diverged {
            epoch: cfg.epochs,
            loss: final_loss,
        });
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pairs: usize,
    /// Top-1 over the whole choice vocabulary.
    pub accuracy: f64,
    /// Top-1 restricted to the presented choices, over pairs that have them.
    pub presented_accuracy: Option<f64>,
}

pub fn evaluate(model: &PreferenceModel, pairs: &[Pair]) -> Result<EvalReport, PreferenceError> {
    if pairs.is_empty() {
        return Err(PreferenceError::NoPairs);
    }
    let mut hits = 0usize;
    let mut presented = 0usize;
    let mut presented_hits = 0usize;
    for pair in pairs {
        let x = model.pair_input(pair)?;
        let p = model.probabilities_of(&x);
        if argmax(&p) == pair.target.answer {
            hits += 1;
        }
        if let Some(shown) = pair.target.presented.as_deref().filter(|s| !s.is_empty()) {
            presented += 1;
            let mut best = shown[0];
            for &i in shown {
                if p[i] > p[best] || (p[i] == p[best] && i < best) {
                    best = i;
                }
            }
            if best == pair.target.answer {
                presented_hits += 1;
            }
        }
    }
    Ok(EvalReport {
        pairs: pairs.len(),
        accuracy: hits as f64 / pairs.len() as f64,
        presented_accuracy: (presented > 0).then(|| presented_hits as f64 / presented as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::build_pairs;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn rec(user: &str, img: &[f64], q: &[f64], answer: usize) -> ChoiceRecord {
        ChoiceRecord::new(user, fv(img), fv(q), answer, 3).unwrap()
    }

    #[test]
    fn zero_model_is_uniform_and_picks_index_zero() {
        let m = PreferenceModel::zeros(2, 2, 4, Fusion::Concat).unwrap();
        let prior = ChoiceRecord::new("u", fv(&[1.0, 2.0]), fv(&[0.5, 0.5]), 3, 4).unwrap();
        let (u, p) = m.predict_from_record(&prior, &fv(&[0.1, 0.2]), &fv(&[0.3, 0.4])).unwrap();
        assert_eq!(u, 0);
        assert!(p.iter().all(|x| (*x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn memorizes_single_pair() {
        let recs = vec![rec("u", &[1.0, 0.0], &[0.0, 1.0], 0), rec("u", &[0.0, 1.0], &[1.0, 0.0], 2)];
        let pairs = build_pairs(&recs)[..1].to_vec();
        let m = train(&pairs, &TrainConfig { epochs: 500, ..TrainConfig::default() }).unwrap();
        let (u, p) = m.predict_from_record(&pairs[0].source, &pairs[0].target.image_feature, &pairs[0].target.question_feature).unwrap();
        assert_eq!(u, 2);
        assert!(p[2] > 0.99, "p = {p:?}");
        assert_eq!(evaluate(&m, &pairs).unwrap().accuracy, 1.0);
    }

    #[test]
    fn training_is_reproducible() {
        let recs: Vec<_> = (0..4).map(|i| rec("u", &[i as f64, 1.0], &[0.5, -0.5], i % 3)).collect();
        let pairs = build_pairs(&recs);
        let cfg = TrainConfig { epochs: 20, seed: 7, ..TrainConfig::default() };
        assert_eq!(train(&pairs, &cfg).unwrap(), train(&pairs, &cfg).unwrap());
        let other = train(&pairs, &TrainConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(train(&pairs, &cfg).unwrap().weights(), other.weights());
    }

    #[test]
    fn divergence_is_reported() {
        let recs = vec![rec("u", &[1e200, 0.0], &[0.0, 1.0], 0), rec("u", &[0.0, 1e200], &[1.0, 0.0], 2)];
        let pairs = build_pairs(&recs);
        let cfg = TrainConfig { learning_rate: 1e10, epochs: 5, ..TrainConfig::default() };
        assert!(matches!(train(&pairs, &cfg), Err(PreferenceError::Diverged { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let m = PreferenceModel::zeros(2, 2, 3, Fusion::Concat).unwrap();
        let prior = rec("u", &[1.0, 0.0], &[0.0, 1.0], 0);
        assert!(matches!(
            m.predict_from_record(&prior, &fv(&[1.0]), &fv(&[0.0, 1.0])),
            Err(PreferenceError::Dimension { what: "image feature", .. })
        ));
    }

    #[test]
    fn presented_accuracy_restricts_argmax() {
        let mut a = rec("u", &[1.0, 0.0], &[0.0, 1.0], 0);
        let mut b = rec("u", &[0.0, 1.0], &[1.0, 0.0], 2);
        a.presented = Some(vec![0, 2]);
        b.presented = Some(vec![1, 2]);
        let pairs = build_pairs(&[a, b]);
        let m = PreferenceModel::zeros(2, 2, 3, Fusion::Concat).unwrap();
        let r = evaluate(&m, &pairs).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.presented_accuracy, Some(0.5));
    }

    #[test]
    fn model_file_roundtrip() {
        let recs = vec![rec("u", &[1.0, 0.0], &[0.0, 1.0], 0), rec("u", &[0.0, 1.0], &[1.0, 0.0], 2)];
        let m = train(&build_pairs(&recs), &TrainConfig { epochs: 3, ..TrainConfig::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        assert_eq!(PreferenceModel::load(&path).unwrap(), m);
    }
}
