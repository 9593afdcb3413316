//! Corpus BLEU with uniform n-gram weights, a corpus-level brevity penalty
//! and no smoothing, on a 0-100 scale.

use std::collections::HashMap;

use serde::Serialize;

use super::EvalError;
use crate::text;

pub const TOKENIZATION: &str = "lowercase, runs of alphanumerics and apostrophes";
pub const SMOOTHING: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuScores {
    /// Cumulative BLEU-n for n = 1..=max_n, indexed by n - 1.
    pub scores: Vec<f64>,
    /// Clipped n-gram precision for each order, in [0, 1].
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuScores {
    pub fn bleu(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.scores.get(i)).copied()
    }
}

/// A candidate narrative with its reference narratives.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub candidate: String,
    pub references: Vec<String>,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU of one candidate narrative (its sentences joined) against a set of
/// reference narratives.
pub fn bleu<S: AsRef<str>, R: AsRef<str>>(candidate: &[S], references: &[R], max_n: usize) -> Result<BleuScores, EvalError> {
    let joined: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    corpus_bleu(
        &[Segment {
            candidate: joined.join(" "),
            references: references.iter().map(|r| r.as_ref().to_string()).collect(),
        }],
        max_n,
    )
}

pub fn corpus_bleu(segments: &[Segment], max_n: usize) -> Result<BleuScores, EvalError> {
    if !(1..=4).contains(&max_n) {
        return Err(EvalError::Invalid(format!("max_n must be 1..=4, got {max_n}")));
    }
    if segments.is_empty() {
        return Err(EvalError::EmptyInput("no segments".into()));
    }
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (i, seg) in segments.iter().enumerate() {
        if seg.references.is_empty() {
            return Err(EvalError::EmptyInput(format!("segment {i} has no references")));
        }
        let cand = text::words(&seg.candidate);
        let refs: Vec<Vec<String>> = seg.references.iter().map(|r| text::words(r)).collect();
        c_len += cand.len();
        r_len += refs
            .iter()
            .map(Vec::len)
            .min_by_key(|&len| (len.abs_diff(cand.len()), len))
            .expect("at least one reference");
        for n in 1..=max_n {
            let cand_counts = ngram_counts(&cand, n);
            let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, n)).collect();
            for (gram, count) in cand_counts {
                let max_ref = ref_counts.iter().map(|rc| rc.get(gram).copied().unwrap_or(0)).max().unwrap_or(0);
                matched[n - 1] += count.min(max_ref);
            }
            total[n - 1] += cand.len().saturating_sub(n - 1);
        }
    }
    if c_len == 0 {
        return Err(EvalError::EmptyInput("candidate has no tokens".into()));
    }
    let precisions: Vec<f64> = matched
        .iter()
        .zip(&total)
        .map(|(&m, &t)| if t == 0 { 0.0 } else { m as f64 / t as f64 })
        .collect();
    let brevity_penalty = if c_len > r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    let scores = (1..=max_n)
        .map(|n| {
            let ps = &precisions[..n];
            if ps.contains(&0.0) {
                0.0
            } else {
                let log_mean = ps.iter().map(|p| p.ln()).sum::<f64>() / n as f64;
                100.0 * brevity_penalty * log_mean.exp()
            }
        })
        .collect();
    Ok(BleuScores {
        scores,
        precisions,
        brevity_penalty,
        candidate_len: c_len,
        reference_len: r_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scores_100() {
        let s = bleu(&["The man is riding a motorcycle.", "He wears a red helmet."], &["the man is riding a motorcycle. he wears a red helmet"], 4).unwrap();
        for n in 1..=4 {
            assert!((s.bleu(n).unwrap() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn disjoint_scores_zero() {
        let s = bleu(&["zebra grazing"], &["a red bus"], 4).unwrap();
        assert_eq!(s.bleu(1), Some(0.0));
    }

    #[test]
    fn rejects_empty_input() {
        assert!(bleu::<&str, &str>(&[], &["x"], 4).is_err());
        assert!(bleu(&["x"], &[] as &[&str], 4).is_err());
        assert!(bleu(&["x"], &["x"], 5).is_err());
    }
}
