use sha2::{Digest, Sha256};

use crate::backends::FeatureVector;
use crate::text;

/// Hashed bag-of-words question embedding, L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuestionEncoder {
    dim: usize,
}

impl QuestionEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "question feature dimension must be positive");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encode(&self, question: &str) -> FeatureVector {
        let mut v = vec![0.0; self.dim];
        for w in text::words(question) {
            let digest = Sha256::digest(format!("q|{w}").as_bytes());
            let mut idx = [0u8; 8];
            idx.copy_from_slice(&digest[..8]);
            let slot = (u64::from_le_bytes(idx) % self.dim as u64) as usize;
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            v[slot] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        FeatureVector::new(v).expect("finite by construction")
    }
}
