//! Question eligibility, answer substitution and attention-driven region
//! selection for the interactive mode.

use serde::{Deserialize, Serialize};

use crate::backends::{AnswerDistribution, AttentionMap, ImageRef, RawBox};
use crate::converter::{Answer, ConvertError, Converter, QType, Question};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectorError {
    #[error("attention map has no activation")]
    NoActivation,
    #[error("box {0} has zero area")]
    ZeroArea(RawBox),
    #[error("box {bbox} lies outside a {width}x{height} image")]
    OutOfBounds { bbox: RawBox, width: f64, height: f64 },
    #[error("asked for {k} choices from a vocabulary of {vocab}")]
    TooManyChoices { k: usize, vocab: usize },
    #[error("invalid selector config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Convert(#[from] ConvertError),
}

/// When a generated question is worth asking a person.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EligibilityConfig {
    /// A question qualifies only if every answer probability is below this.
    pub alpha_threshold: f64,
    pub exclude_yes_no: bool,
    /// Question generations tried per image before giving up.
    pub max_attempts: usize,
}

impl Default for EligibilityConfig {
    fn default() -> Self {
        Self {
            alpha_threshold: 0.33,
            exclude_yes_no: true,
            max_attempts: 10,
        }
    }
}

impl EligibilityConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if !(self.alpha_threshold > 0.0 && self.alpha_threshold <= 1.0) {
            return Err(SelectorError::InvalidConfig(format!(
                "alpha_threshold must be in (0, 1], got {}",
                self.alpha_threshold
            )));
        }
        if self.max_attempts == 0 {
            return Err(SelectorError::InvalidConfig("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    #[serde(flatten)]
    pub eligibility: EligibilityConfig,
    /// Per-side enlargement of attention boxes, relative to their size.
    pub alpha_mag: f64,
    /// Fraction of the map maximum at which a cell counts as attended.
    pub activation_fraction: f64,
    pub top_k: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            eligibility: EligibilityConfig::default(),
            alpha_mag: 0.25,
            activation_fraction: 0.5,
            top_k: 3,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        self.eligibility.validate()?;
        if !(self.alpha_mag >= 0.0 && self.alpha_mag.is_finite()) {
            return Err(SelectorError::InvalidConfig(format!("alpha_mag must be >= 0, got {}", self.alpha_mag)));
        }
        check_fraction(self.activation_fraction)?;
        if self.top_k == 0 {
            return Err(SelectorError::InvalidConfig("top_k must be positive".into()));
        }
        Ok(())
    }
}

fn check_fraction(f: f64) -> Result<(), SelectorError> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(SelectorError::InvalidConfig(format!("activation_fraction must be in (0, 1], got {f}")))
    }
}

/// True iff the question may be asked: not an excluded yes/no question and
/// no answer reaches the threshold (strict comparison).
pub fn is_eligible(dist: &AnswerDistribution, qtype: QType, cfg: &EligibilityConfig) -> bool {
    if qtype == QType::YesNo && cfg.exclude_yes_no {
        return false;
    }
    dist.max_prob() < cfg.alpha_threshold
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSource {
    Whole,
    /// Rank among the backend's proposals, 0 = best.
    Proposal { rank: usize },
    Attention { phrase: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(rename = "box")]
    pub bbox: RawBox,
    pub source: RegionSource,
    pub magnified_from: Option<RawBox>,
}

impl Region {
    pub fn whole(image: &ImageRef) -> Self {
        Self {
            bbox: image.frame(),
            source: RegionSource::Whole,
            magnified_from: None,
        }
    }

    pub fn proposal(bbox: RawBox, rank: usize) -> Self {
        Self {
            bbox,
            source: RegionSource::Proposal { rank },
            magnified_from: None,
        }
    }
}

const WH_WORDS: &[&str] = &["what", "who", "whom", "whose", "which", "where", "when", "why", "how"];

fn is_wh_word(w: &str) -> bool {
    WH_WORDS.contains(&w.to_lowercase().as_str())
}

/// Declarative phrase with the answer in place of the wh-word, used as the
/// attention query. Uses the conversion rules when one matches and a plain
/// in-place substitution otherwise.
pub fn substitute_wh(converter: &Converter, question: &Question, answer: &Answer) -> Result<Vec<String>, SelectorError> {
    if question.qtype() == QType::YesNo {
        return Err(ConvertError::NoWhToken(question.raw().to_string()).into());
    }
    let answer_words: Vec<String> = answer.label().split_whitespace().map(str::to_string).collect();
    match converter.rewrite(question, answer) {
        Ok(rw) => {
            let stray_wh = rw.words.iter().any(|w| is_wh_word(w) && !answer_words.contains(w));
            if !stray_wh {
                return Ok(rw.words);
            }
        }
        Err(ConvertError::NoRuleMatch { .. } | ConvertError::NoFiniteVerb(_)) => {}
        Err(e) => return Err(e.into()),
    }
    let (words, _) = question.body();
    let first = words
        .iter()
        .position(|w| is_wh_word(w))
        .ok_or_else(|| ConvertError::NoWhToken(question.raw().to_string()))?;
    let mut out = Vec::with_capacity(words.len() + answer_words.len());
    let mut i = 0;
    while i < words.len() {
        if i == first {
            out.extend(answer_words.iter().cloned());
            if words[i].eq_ignore_ascii_case("how") && words.get(i + 1).is_some_and(|w| w.eq_ignore_ascii_case("many")) {
                i += 1;
            }
        } else if !is_wh_word(&words[i]) {
            out.push(if i == 0 { words[i].to_lowercase() } else { words[i].clone() });
        }
        i += 1;
    }
    Ok(out)
}

/// Tightest pixel box around every grid cell reaching
/// `activation_fraction * max`.
pub fn attention_to_box(map: &AttentionMap, dims: (f64, f64), activation_fraction: f64) -> Result<RawBox, SelectorError> {
    check_fraction(activation_fraction)?;
    let max = map.max();
    if max.is_nan() || max <= 0.0 {
        return Err(SelectorError::NoActivation);
    }
    let threshold = activation_fraction * max;
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for r in 0..map.rows() {
        for c in 0..map.cols() {
            if map.get(r, c) >= threshold {
                r0 = r0.min(r);
                r1 = r1.max(r);
                c0 = c0.min(c);
                c1 = c1.max(c);
            }
        }
    }
    let (w, h) = dims;
    let (cols, rows) = (map.cols() as f64, map.rows() as f64);
    let x = |c: usize| (c as f64 * w / cols).min(w);
    let y = |r: usize| (r as f64 * h / rows).min(h);
    RawBox::new(x(c0), y(r0), x(c1 + 1), y(r1 + 1)).map_err(|_| SelectorError::NoActivation)
}

/// Grows each side by `alpha` times the box's extent on that axis, clamped
/// to the image.
pub fn magnify_box(bbox: &RawBox, dims: (f64, f64), alpha: f64) -> Result<RawBox, SelectorError> {
    let (w_img, h_img) = dims;
    if !bbox.within(w_img, h_img) {
        return Err(SelectorError::OutOfBounds {
            bbox: *bbox,
            width: w_img,
            height: h_img,
        });
    }
    if bbox.area() <= 0.0 {
        return Err(SelectorError::ZeroArea(*bbox));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(SelectorError::InvalidConfig(format!("alpha_mag must be >= 0, got {alpha}")));
    }
    let (w, h) = (bbox.width(), bbox.height());
    let out = RawBox::new(
        (bbox.x0 - w * alpha).max(0.0),
        (bbox.y0 - h * alpha).max(0.0),
        (bbox.xmax + w * alpha).min(w_img),
        (bbox.ymax + h * alpha).min(h_img),
    )
    .expect("clamped expansion of a valid box is valid");
    Ok(out)
}

pub fn magnify_region(bbox: &RawBox, dims: (f64, f64), alpha: f64, source: RegionSource) -> Result<Region, SelectorError> {
    let magnified = magnify_box(bbox, dims, alpha)?;
    Ok(Region {
        bbox: magnified,
        source,
        magnified_from: Some(*bbox),
    })
}

/// The `k` most probable labels; equal probabilities keep vocabulary order.
pub fn top_k_choices(dist: &AnswerDistribution, k: usize) -> Result<Vec<String>, SelectorError> {
    let probs = dist.probs();
    if k == 0 || k > probs.len() {
        return Err(SelectorError::TooManyChoices { k, vocab: probs.len() });
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let vocab = dist.vocab();
    Ok(order[..k]
        .iter()
        .map(|&i| vocab.label(i).expect("index within vocabulary").to_string())
        .collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::backends::Vocabulary;

    fn vocab(labels: &[&str]) -> Arc<Vocabulary> {
        Arc::new(Vocabulary::new(labels.iter().map(|s| s.to_string()).collect()).unwrap())
    }

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> RawBox {
        RawBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn eligibility_threshold_is_strict() {
        let v = vocab(&["a", "b", "c", "d"]);
        let cfg = EligibilityConfig::default();
        let at = AnswerDistribution::new(v.clone(), vec![0.33, 0.33, 0.33, 0.01]).unwrap();
        assert!(!is_eligible(&at, QType::WhOther, &cfg));
        let below = AnswerDistribution::new(v.clone(), vec![0.32, 0.32, 0.32, 0.04]).unwrap();
        assert!(is_eligible(&below, QType::WhOther, &cfg));
        assert!(!is_eligible(&below, QType::YesNo, &cfg));
        let half = AnswerDistribution::new(v, vec![0.5, 0.2, 0.2, 0.1]).unwrap();
        assert!(!is_eligible(&half, QType::Number, &cfg));
    }

    #[test]
    fn uniform_over_large_vocab_is_eligible() {
        let d = AnswerDistribution::uniform(Arc::new(Vocabulary::synthetic(1250)));
        assert!(is_eligible(&d, QType::WhOther, &EligibilityConfig::default()));
    }

    #[test]
    fn hot_cell_scales_to_pixels() {
        let mut m = AttentionMap::zeros(10, 10);
        m.set(4, 3, 1.0);
        assert_eq!(attention_to_box(&m, (100.0, 100.0), 0.5).unwrap(), bx(30.0, 40.0, 40.0, 50.0));
    }

    #[test]
    fn uniform_map_covers_frame_and_zero_map_fails() {
        let m = AttentionMap::new(4, 5, vec![0.2; 20]).unwrap();
        assert_eq!(attention_to_box(&m, (640.0, 480.0), 0.5).unwrap(), bx(0.0, 0.0, 640.0, 480.0));
        let z = AttentionMap::zeros(4, 5);
        assert_eq!(attention_to_box(&z, (640.0, 480.0), 0.5), Err(SelectorError::NoActivation));
    }

    #[test]
    fn magnification_examples() {
        let d = (100.0, 100.0);
        assert_eq!(magnify_box(&bx(40.0, 40.0, 60.0, 60.0), d, 0.25).unwrap(), bx(35.0, 35.0, 65.0, 65.0));
        assert_eq!(magnify_box(&bx(0.0, 0.0, 20.0, 20.0), d, 0.25).unwrap(), bx(0.0, 0.0, 25.0, 25.0));
        let b = bx(12.5, 3.0, 40.0, 77.0);
        assert_eq!(magnify_box(&b, d, 0.0).unwrap(), b);
        assert!(matches!(magnify_box(&bx(5.0, 5.0, 5.0, 9.0), d, 0.25), Err(SelectorError::ZeroArea(_))));
        let r = magnify_region(&b, d, 0.25, RegionSource::Whole).unwrap();
        assert_eq!(r.magnified_from, Some(b));
        assert!(r.bbox.contains(&b));
    }

    #[test]
    fn top_k_tie_break_by_vocab_order() {
        let v = vocab(&["fork", "pizza", "plate", "cup"]);
        let d = AnswerDistribution::new(v.clone(), vec![0.2, 0.3, 0.3, 0.2]).unwrap();
        assert_eq!(top_k_choices(&d, 3).unwrap(), ["pizza", "plate", "fork"]);
        let one_hot = AnswerDistribution::new(v, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(top_k_choices(&one_hot, 1).unwrap(), ["cup"]);
        assert!(top_k_choices(&one_hot, 5).is_err());
    }

    #[test]
    fn wh_substitution() {
        let c = Converter::builtin();
        let sub = |q: &str, a: &str| {
            let q = c.parse_question(q).unwrap();
            let a = Answer::for_question(&q, a).unwrap();
            substitute_wh(&c, &q, &a).map(|w| w.join(" "))
        };
        assert_eq!(sub("what is on the table?", "pizza").unwrap(), "pizza is on the table");
        assert_eq!(sub("who threw the ball?", "pitcher").unwrap(), "pitcher threw the ball");
        assert_eq!(sub("how many pens are there?", "2").unwrap(), "there are 2 pens");
        assert_eq!(sub("Why did he fall?", "ice").unwrap(), "ice did he fall");
        assert!(sub("Is she happy?", "yes").is_err());
    }
}
