use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::BackendError;

/// Dense, finite feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, BackendError> {
        if values.is_empty() {
            return Err(BackendError::Invalid("feature vector is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(BackendError::Invalid(format!(
                "feature entry {i} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn expect_dim(&self, expected: usize) -> Result<(), BackendError> {
        if self.dim() != expected {
            return Err(BackendError::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = BackendError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.0
    }
}

/// Axis-aligned box in image pixel space, `(x0, y0)` top-left, `(xmax, ymax)` bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct RawBox {
    pub x0: f64,
    pub y0: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl RawBox {
    pub fn new(x0: f64, y0: f64, xmax: f64, ymax: f64) -> Result<Self, BackendError> {
        let finite = [x0, y0, xmax, ymax].iter().all(|v| v.is_finite());
        if !finite || x0 < 0.0 || y0 < 0.0 || x0 > xmax || y0 > ymax {
            return Err(BackendError::Invalid(format!(
                "invalid box ({x0}, {y0}, {xmax}, {ymax})"
            )));
        }
        Ok(Self { x0, y0, xmax, ymax })
    }

    pub fn full_frame(width: f64, height: f64) -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            xmax: width,
            ymax: height,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.x0
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, other: &RawBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.xmax >= other.xmax && self.ymax >= other.ymax
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x0 >= 0.0 && self.y0 >= 0.0 && self.xmax <= width && self.ymax <= height
    }

    pub fn intersection_area(&self, other: &RawBox) -> f64 {
        let w = (self.xmax.min(other.xmax) - self.x0.max(other.x0)).max(0.0);
        let h = (self.ymax.min(other.ymax) - self.y0.max(other.y0)).max(0.0);
        w * h
    }

    pub fn iou(&self, other: &RawBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

impl TryFrom<[f64; 4]> for RawBox {
    type Error = BackendError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<RawBox> for [f64; 4] {
    fn from(b: RawBox) -> Self {
        [b.x0, b.y0, b.xmax, b.ymax]
    }
}

impl fmt::Display for RawBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x0, self.y0, self.xmax, self.ymax)
    }
}

/// An image known to the system: id, pixel dimensions and whole-image feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub feature: FeatureVector,
}

impl ImageRef {
    pub fn new(
        id: impl Into<String>,
        width: u32,
        height: u32,
        feature: FeatureVector,
    ) -> Result<Self, BackendError> {
        if width == 0 || height == 0 {
            return Err(BackendError::EmptyImage);
        }
        Ok(Self {
            id: id.into(),
            width,
            height,
            feature,
        })
    }

    pub fn dims(&self) -> (f64, f64) {
        (f64::from(self.width), f64::from(self.height))
    }

    pub fn frame(&self) -> RawBox {
        let (w, h) = self.dims();
        RawBox::full_frame(w, h)
    }
}

/// Ordered closed answer vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(labels: Vec<String>) -> Result<Self, BackendError> {
        if labels.is_empty() {
            return Err(BackendError::Invalid("vocabulary is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.trim().is_empty() {
                return Err(BackendError::Invalid(format!("vocabulary label {i} is blank")));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(BackendError::Invalid(format!("duplicate vocabulary label {label:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    /// `label_0 .. label_{n-1}`, for sizing tests.
    pub fn synthetic(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("label_{i}")).collect()).expect("synthetic labels are unique")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.get(i).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Exact match first, then case-insensitive match.
    pub fn resolve(&self, label: &str) -> Option<usize> {
        let trimmed = label.trim();
        self.index_of(trimmed).or_else(|| {
            let lower = trimmed.to_lowercase();
            self.labels.iter().position(|l| l.to_lowercase() == lower)
        })
    }
}

/// Probability vector over a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerDistribution {
    vocab: Arc<Vocabulary>,
    probs: Vec<f64>,
}

pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

impl AnswerDistribution {
    pub fn new(vocab: Arc<Vocabulary>, probs: Vec<f64>) -> Result<Self, BackendError> {
        if probs.len() != vocab.len() {
            return Err(BackendError::DimensionMismatch {
                expected: vocab.len(),
                got: probs.len(),
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0 + DISTRIBUTION_TOLERANCE) {
            return Err(BackendError::Invalid("probabilities must lie in [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(BackendError::Invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { vocab, probs })
    }

    /// Normalizes non-negative weights into a distribution. Weights that
    /// already sum to one within tolerance are kept as given.
    pub fn from_weights(vocab: Arc<Vocabulary>, weights: Vec<f64>) -> Result<Self, BackendError> {
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(BackendError::Invalid("weights must be non-negative with positive mass".into()));
        }
        if (sum - 1.0).abs() <= DISTRIBUTION_TOLERANCE && weights.iter().all(|w| *w <= 1.0) {
            return Self::new(vocab, weights);
        }
        let probs = weights.into_iter().map(|w| w / sum).collect();
        Self::new(vocab, probs)
    }

    pub fn uniform(vocab: Arc<Vocabulary>) -> Self {
        let n = vocab.len();
        Self {
            vocab,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, label: &str) -> Option<f64> {
        self.vocab.index_of(label).map(|i| self.probs[i])
    }

    /// Index of the most probable label; lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Non-negative attention grid in row-major order, aligned to the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionMap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl AttentionMap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, BackendError> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(BackendError::Invalid(format!(
                "attention grid {rows}x{cols} does not match {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(BackendError::Invalid("attention values must be finite and non-negative".into()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value.max(0.0);
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(row, col)` of the largest cell, first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.cols, best % self.cols)
    }
}
