use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    check_proposal_request, check_question_text, AnswerDistribution, AttentionMap, Backend,
    BackendError, FeatureVector, ImageRef, QuestionRequest, RawBox, Vocabulary,
};

pub const FIXTURE_SCHEMA: u32 = 1;

const DEFAULT_FEATURE_DIM: usize = 8;
const DEFAULT_GRID: [usize; 2] = [10, 10];

/// On-disk fixture document driving [`MockBackend`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub schema: u32,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    /// `[rows, cols]` of mock attention maps.
    #[serde(default = "default_grid")]
    pub attention_grid: [usize; 2],
    pub vocab: Vec<String>,
    /// Used when no question entry overlaps the requested region.
    #[serde(default)]
    pub fallback_question: Option<String>,
    /// Questions keyed by [`MockBackend::feature_key`] of the region feature.
    #[serde(default)]
    pub feature_questions: BTreeMap<String, String>,
    pub images: Vec<FixtureImage>,
}

fn default_feature_dim() -> usize {
    DEFAULT_FEATURE_DIM
}

fn default_grid() -> [usize; 2] {
    DEFAULT_GRID
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureImage {
    pub id: String,
    pub width: u32,
    pub height: u32,
    /// Derived from the image id when absent.
    #[serde(default)]
    pub feature: Option<Vec<f64>>,
    /// Ranked proposals for the full frame; the grid rule applies when absent.
    #[serde(default)]
    pub proposals: Option<Vec<RawBox>>,
    #[serde(default)]
    pub questions: Vec<RegionQuestions>,
    #[serde(default)]
    pub answers: BTreeMap<String, AnswerSpec>,
    #[serde(default)]
    pub attention: Vec<AttentionSpec>,
}

/// Candidate questions for the region best overlapping `region`, in generation order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionQuestions {
    #[serde(rename = "box")]
    pub region: RawBox,
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerSpec {
    Uniform { uniform: UniformOver },
    /// Listed labels take their probability; leftover mass is spread over
    /// the unlisted labels.
    Probs(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UniformOver {
    /// `"*"`: the whole vocabulary.
    All(String),
    Labels(Vec<String>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionSpec {
    /// Matches the whole phrase, case-insensitively.
    #[serde(default)]
    pub phrase: Option<String>,
    /// Matches any phrase containing this word sequence.
    #[serde(default)]
    pub keyword: Option<String>,
    /// Gaussian bump center in pixels, snapped to the containing cell.
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    /// Bump width in grid cells.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Cells whose centers fall inside this box are set to 1.
    #[serde(default)]
    pub hot: Option<RawBox>,
    #[serde(default)]
    pub zero: bool,
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let fixture: Fixture =
            serde_json::from_str(text).map_err(|e| BackendError::Invalid(format!("fixture: {e}")))?;
        if fixture.schema != FIXTURE_SCHEMA {
            return Err(BackendError::Invalid(format!(
                "fixture schema {} is not supported (expected {FIXTURE_SCHEMA})",
                fixture.schema
            )));
        }
        Ok(fixture)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Invalid(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn catalog(&self) -> Result<ImageCatalog, BackendError> {
        let mut catalog = ImageCatalog::default();
        for img in &self.images {
            let feature = match &img.feature {
                Some(values) => {
                    let f = FeatureVector::new(values.clone())?;
                    f.expect_dim(self.feature_dim)?;
                    f
                }
                None => derived_feature(&format!("image|{}", img.id), self.feature_dim, None),
            };
            catalog.insert(ImageRef::new(img.id.clone(), img.width, img.height, feature)?)?;
        }
        Ok(catalog)
    }
}

/// Images known to the system, by id.
#[derive(Debug, Clone, Default)]
pub struct ImageCatalog {
    order: Vec<String>,
    images: HashMap<String, ImageRef>,
}

impl ImageCatalog {
    pub fn insert(&mut self, image: ImageRef) -> Result<(), BackendError> {
        if self.images.contains_key(&image.id) {
            return Err(BackendError::Invalid(format!("duplicate image id {:?}", image.id)));
        }
        self.order.push(image.id.clone());
        self.images.insert(image.id.clone(), image);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&ImageRef, BackendError> {
        self.images
            .get(id)
            .ok_or_else(|| BackendError::UnknownImage(id.to_string()))
    }

    pub fn ids(&self) -> &[String] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

#[derive(Debug)]
struct MockImage {
    proposals: Option<Vec<RawBox>>,
    questions: Vec<RegionQuestions>,
    answers: HashMap<String, AnswerDistribution>,
    attention: Vec<AttentionSpec>,
}

/// Deterministic backend reading everything from a [`Fixture`].
///
/// Stateless after construction: every answer is a pure function of the
/// fixture and the call arguments.
#[derive(Debug)]
pub struct MockBackend {
    vocab: Arc<Vocabulary>,
    feature_dim: usize,
    grid: [usize; 2],
    fallback_question: Option<String>,
    feature_questions: BTreeMap<String, String>,
    images: HashMap<String, MockImage>,
    catalog: ImageCatalog,
}

impl MockBackend {
    pub fn from_fixture(fixture: &Fixture) -> Result<Self, BackendError> {
        if fixture.feature_dim == 0 {
            return Err(BackendError::Invalid("feature_dim must be positive".into()));
        }
        if fixture.attention_grid.contains(&0) {
            return Err(BackendError::Invalid("attention grid must be non-empty".into()));
        }
        let vocab = Arc::new(Vocabulary::new(fixture.vocab.clone())?);
        let catalog = fixture.catalog()?;
        if let Some(q) = &fixture.fallback_question {
            check_question_text(q)?;
        }
        for q in fixture.feature_questions.values() {
            check_question_text(q)?;
        }

        let mut images = HashMap::new();
        for img in &fixture.images {
            let (w, h) = (f64::from(img.width), f64::from(img.height));
            if let Some(props) = &img.proposals {
                if let Some(b) = props.iter().find(|b| !b.within(w, h)) {
                    return Err(BackendError::Invalid(format!("proposal {b} outside image {}", img.id)));
                }
            }
            for rq in &img.questions {
                for q in &rq.questions {
                    check_question_text(q)?;
                }
            }
            let mut answers = HashMap::new();
            for (question, spec) in &img.answers {
                let dist = build_distribution(&vocab, spec)
                    .map_err(|e| BackendError::Invalid(format!("{} / {question:?}: {e}", img.id)))?;
                answers.insert(normalize_key(question), dist);
            }
            images.insert(
                img.id.clone(),
                MockImage {
                    proposals: img.proposals.clone(),
                    questions: img.questions.clone(),
                    answers,
                    attention: img.attention.clone(),
                },
            );
        }

        Ok(Self {
            vocab,
            feature_dim: fixture.feature_dim,
            grid: fixture.attention_grid,
            fallback_question: fixture.fallback_question.clone(),
            feature_questions: fixture.feature_questions.clone(),
            images,
            catalog,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        Self::from_fixture(&Fixture::load(path)?)
    }

    pub fn catalog(&self) -> &ImageCatalog {
        &self.catalog
    }

    /// Stable key for a feature vector: the first 16 hex digits of the
    /// SHA-256 of its little-endian bytes.
    pub fn feature_key(feature: &FeatureVector) -> String {
        let mut hasher = Sha256::new();
        for v in feature.values() {
            hasher.update(v.to_le_bytes());
        }
        hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn image(&self, image: &ImageRef) -> Result<&MockImage, BackendError> {
        self.images
            .get(&image.id)
            .ok_or_else(|| BackendError::UnknownImage(image.id.clone()))
    }
}

/// Partition of `frame`: the frame itself, then 2x2 quadrants, then 4x4
/// cells and so on, row-major within each level.
pub(crate) fn grid_partition(frame: &RawBox, k: usize) -> Vec<RawBox> {
    let mut out = Vec::with_capacity(k);
    let mut level = 0u32;
    while out.len() < k {
        let n = 1usize << level;
        let (cw, ch) = (frame.width() / n as f64, frame.height() / n as f64);
        for row in 0..n {
            for col in 0..n {
                if out.len() == k {
                    return out;
                }
                let x0 = frame.x0 + col as f64 * cw;
                let y0 = frame.y0 + row as f64 * ch;
                // Pin the far edge to the frame so rounding never leaves the image.
                let xmax = if col + 1 == n { frame.xmax } else { x0 + cw };
                let ymax = if row + 1 == n { frame.ymax } else { y0 + ch };
                out.push(RawBox { x0, y0, xmax, ymax });
            }
        }
        level += 1;
        if level > 16 {
            break;
        }
    }
    out
}

fn normalize_key(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn derived_feature(seed_text: &str, dim: usize, base: Option<&FeatureVector>) -> FeatureVector {
    let digest = Sha256::digest(seed_text.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(seed);
    let values = (0..dim)
        .map(|i| {
            let noise: f64 = rng.random_range(-1.0..1.0);
            match base {
                Some(b) => 0.5 * b.values()[i] + 0.5 * noise,
                None => noise,
            }
        })
        .collect();
    FeatureVector::new(values).expect("derived features are finite")
}

fn build_distribution(vocab: &Arc<Vocabulary>, spec: &AnswerSpec) -> Result<AnswerDistribution, BackendError> {
    let n = vocab.len();
    let weights = match spec {
        AnswerSpec::Uniform { uniform: UniformOver::All(s) } if s == "*" => vec![1.0; n],
        AnswerSpec::Uniform { uniform: UniformOver::All(s) } => {
            return Err(BackendError::Invalid(format!("uniform must be \"*\" or a label list, got {s:?}")));
        }
        AnswerSpec::Uniform { uniform: UniformOver::Labels(labels) } => {
            let mut w = vec![0.0; n];
            for label in labels {
                let i = vocab
                    .index_of(label)
                    .ok_or_else(|| BackendError::UnknownVocabulary(vec![label.clone()]))?;
                w[i] = 1.0;
            }
            w
        }
        AnswerSpec::Probs(map) => {
            let mut w = vec![0.0; n];
            let mut listed = vec![false; n];
            let unknown: Vec<String> = map.keys().filter(|l| vocab.index_of(l).is_none()).cloned().collect();
            if !unknown.is_empty() {
                return Err(BackendError::UnknownVocabulary(unknown));
            }
            for (label, p) in map {
                let i = vocab.index_of(label).expect("checked above");
                w[i] = *p;
                listed[i] = true;
            }
            let sum: f64 = w.iter().sum();
            if sum > 1.0 + super::DISTRIBUTION_TOLERANCE {
                return Err(BackendError::Invalid(format!("listed probabilities sum to {sum} > 1")));
            }
            let rest = 1.0 - sum;
            if rest > super::DISTRIBUTION_TOLERANCE {
                let unlisted = listed.iter().filter(|l| !**l).count();
                if unlisted == 0 {
                    return Err(BackendError::Invalid(format!("probabilities sum to {sum} and no label is left")));
                }
                let share = rest / unlisted as f64;
                for (wi, li) in w.iter_mut().zip(&listed) {
                    if !li {
                        *wi = share;
                    }
                }
            }
            w
        }
    };
    AnswerDistribution::from_weights(vocab.clone(), weights)
}

impl Backend for MockBackend {
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn propose_regions(&self, image: &ImageRef, within: &RawBox, k: usize) -> Result<Vec<RawBox>, BackendError> {
        check_proposal_request(image, within, k)?;
        let img = self.image(image)?;
        if *within == image.frame() {
            if let Some(props) = &img.proposals {
                return Ok(props.iter().take(k).copied().collect());
            }
        }
        Ok(grid_partition(within, k))
    }

    fn region_feature(&self, image: &ImageRef, region: &RawBox) -> Result<FeatureVector, BackendError> {
        image.feature.expect_dim(self.feature_dim)?;
        if *region == image.frame() {
            return Ok(image.feature.clone());
        }
        let key = format!(
            "region|{}|{}|{}|{}|{}",
            image.id, region.x0, region.y0, region.xmax, region.ymax
        );
        Ok(derived_feature(&key, self.feature_dim, Some(&image.feature)))
    }

    fn generate_question(&self, request: &QuestionRequest<'_>) -> Result<String, BackendError> {
        request.feature.expect_dim(self.feature_dim)?;
        if request.attempt == 0 {
            if let Some(q) = self.feature_questions.get(&Self::feature_key(request.feature)) {
                return Ok(q.clone());
            }
        }
        let img = self.image(request.image)?;
        let mut best: Option<(&RegionQuestions, f64)> = None;
        for rq in &img.questions {
            let iou = rq.region.iou(request.region);
            if iou > 0.0 && best.is_none_or(|(_, b)| iou > b) {
                best = Some((rq, iou));
            }
        }
        if let Some(q) = best.and_then(|(rq, _)| rq.questions.get(request.attempt)) {
            return Ok(q.clone());
        }
        match (&self.fallback_question, request.attempt) {
            (Some(q), 0) => Ok(q.clone()),
            _ => Err(BackendError::FixtureMiss(format!(
                "question #{} for region {} of image {:?}",
                request.attempt, request.region, request.image.id
            ))),
        }
    }

    fn answer_distribution(
        &self,
        image: &ImageRef,
        feature: &FeatureVector,
        question: &str,
    ) -> Result<AnswerDistribution, BackendError> {
        feature.expect_dim(self.feature_dim)?;
        if question.trim().is_empty() {
            return Err(BackendError::Invalid("question is empty".into()));
        }
        let img = self.image(image)?;
        img.answers
            .get(&normalize_key(question))
            .cloned()
            .ok_or_else(|| BackendError::FixtureMiss(format!("answers to {question:?} on image {:?}", image.id)))
    }

    fn attention_map(&self, image: &ImageRef, phrase: &[String]) -> Result<AttentionMap, BackendError> {
        if phrase.is_empty() {
            return Err(BackendError::Invalid("attention phrase is empty".into()));
        }
        let img = self.image(image)?;
        let [rows, cols] = self.grid;
        let joined = normalize_key(&phrase.join(" "));
        let padded = format!(" {joined} ");
        let spec = img
            .attention
            .iter()
            .find(|s| s.phrase.as_deref().is_some_and(|p| normalize_key(p) == joined))
            .or_else(|| {
                img.attention.iter().find(|s| {
                    s.keyword
                        .as_deref()
                        .is_some_and(|k| padded.contains(&format!(" {} ", normalize_key(k))))
                })
            });
        let Some(spec) = spec else {
            return Ok(AttentionMap::zeros(rows, cols));
        };
        let (w, h) = image.dims();
        let mut map = AttentionMap::zeros(rows, cols);
        if spec.zero {
            return Ok(map);
        }
        if let Some(hot) = &spec.hot {
            for r in 0..rows {
                for c in 0..cols {
                    let cx = (c as f64 + 0.5) * w / cols as f64;
                    let cy = (r as f64 + 0.5) * h / rows as f64;
                    if cx >= hot.x0 && cx <= hot.xmax && cy >= hot.y0 && cy <= hot.ymax {
                        map.set(r, c, 1.0);
                    }
                }
            }
        }
        if let Some([px, py]) = spec.center {
            let sigma = spec.sigma.unwrap_or(1.0).max(1e-6);
            let c0 = ((px * cols as f64 / w).floor() as usize).min(cols - 1);
            let r0 = ((py * rows as f64 / h).floor() as usize).min(rows - 1);
            for r in 0..rows {
                for c in 0..cols {
                    let dr = r as f64 - r0 as f64;
                    let dc = c as f64 - c0 as f64;
                    let v = (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp();
                    map.set(r, c, map.get(r, c).max(v));
                }
            }
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Fixture {
        Fixture::from_json(
            r#"{
              "schema": 1,
              "feature_dim": 4,
              "vocab": ["pizza", "plate", "pine apple", "other", "yes", "no"],
              "images": [{
                "id": "table", "width": 100, "height": 100,
                "questions": [{"box": [0, 0, 100, 100], "questions": ["What is on the table?"]}],
                "answers": {
                  "What is on the table?": {"pizza": 0.3, "plate": 0.3, "pine apple": 0.3, "other": 0.1},
                  "Is it hot?": {"uniform": ["yes", "no"]},
                  "What is this?": {"uniform": "*"}
                },
                "attention": [
                  {"phrase": "pizza is on the table", "center": [50, 50], "sigma": 1.0},
                  {"keyword": "plate", "zero": true}
                ]
              }]
            }"#,
        )
        .unwrap()
    }

    fn setup() -> (MockBackend, ImageRef) {
        let backend = MockBackend::from_fixture(&fixture()).unwrap();
        let image = backend.catalog().get("table").unwrap().clone();
        (backend, image)
    }

    #[test]
    fn grid_k1_is_full_frame() {
        let (b, img) = setup();
        let boxes = b.propose_regions(&img, &img.frame(), 1).unwrap();
        assert_eq!(boxes, vec![RawBox::full_frame(100.0, 100.0)]);
    }

    #[test]
    fn grid_k5_is_frame_then_quadrants() {
        let (b, img) = setup();
        let boxes = b.propose_regions(&img, &img.frame(), 5).unwrap();
        let expected: Vec<RawBox> = [
            [0.0, 0.0, 100.0, 100.0],
            [0.0, 0.0, 50.0, 50.0],
            [50.0, 0.0, 100.0, 50.0],
            [0.0, 50.0, 50.0, 100.0],
            [50.0, 50.0, 100.0, 100.0],
        ]
        .into_iter()
        .map(|a| RawBox::try_from(a).unwrap())
        .collect();
        assert_eq!(boxes, expected);
    }

    #[test]
    fn zero_k_is_rejected() {
        let (b, img) = setup();
        assert!(b.propose_regions(&img, &img.frame(), 0).is_err());
    }

    #[test]
    fn empty_image_is_rejected() {
        assert_eq!(
            ImageRef::new("x", 0, 10, FeatureVector::zeros(4)).unwrap_err(),
            BackendError::EmptyImage
        );
    }

    #[test]
    fn question_lookup_is_deterministic() {
        let (b, img) = setup();
        let frame = img.frame();
        let req = QuestionRequest { image: &img, region: &frame, feature: &img.feature, attempt: 0 };
        let q1 = b.generate_question(&req).unwrap();
        let q2 = b.generate_question(&req).unwrap();
        assert_eq!(q1, "What is on the table?");
        assert_eq!(q1, q2);
        let miss = QuestionRequest { attempt: 1, ..req };
        assert!(matches!(b.generate_question(&miss), Err(BackendError::FixtureMiss(_))));
    }

    #[test]
    fn feature_keyed_questions() {
        let mut fx = fixture();
        let feature = FeatureVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        fx.feature_questions
            .insert(MockBackend::feature_key(&feature), "What is on the table?".into());
        fx.images[0].questions.clear();
        let b = MockBackend::from_fixture(&fx).unwrap();
        let img = b.catalog().get("table").unwrap().clone();
        let region = RawBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let req = QuestionRequest { image: &img, region: &region, feature: &feature, attempt: 0 };
        assert_eq!(b.generate_question(&req).unwrap(), "What is on the table?");
        let other = FeatureVector::new(vec![0.0, 0.2, 0.3, 0.4]).unwrap();
        let req = QuestionRequest { feature: &other, ..req };
        assert!(matches!(b.generate_question(&req), Err(BackendError::FixtureMiss(_))));
    }

    #[test]
    fn answers_from_fixture() {
        let (b, img) = setup();
        let d = b.answer_distribution(&img, &img.feature, "What is on the table?").unwrap();
        assert_eq!(d.prob("pizza"), Some(0.3));
        assert_eq!(d.prob("pine apple"), Some(0.3));
        assert_eq!(d.prob("other"), Some(0.1));
        assert_eq!(d.prob("yes"), Some(0.0));
    }

    #[test]
    fn uniform_answers() {
        let (b, img) = setup();
        let d = b.answer_distribution(&img, &img.feature, "What is this?").unwrap();
        assert!(d.probs().iter().all(|p| *p == 1.0 / 6.0));
        let d = b.answer_distribution(&img, &img.feature, "is it hot?").unwrap();
        assert_eq!(d.prob("yes"), Some(0.5));
        assert_eq!(d.prob("pizza"), Some(0.0));
    }

    #[test]
    fn leftover_mass_spreads_over_unlisted_labels() {
        let vocab = Arc::new(Vocabulary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap());
        let spec = AnswerSpec::Probs([("a".to_string(), 0.5)].into_iter().collect());
        let d = build_distribution(&vocab, &spec).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.25, 0.25]);
        let bad = AnswerSpec::Probs([("zz".to_string(), 0.5)].into_iter().collect());
        assert!(matches!(build_distribution(&vocab, &bad), Err(BackendError::UnknownVocabulary(_))));
    }

    #[test]
    fn attention_bump_peaks_at_center_cell() {
        let (b, img) = setup();
        let phrase: Vec<String> = "pizza is on the table".split(' ').map(String::from).collect();
        let map = b.attention_map(&img, &phrase).unwrap();
        // pixel (50, 50) lies in cell (5, 5) of the 10x10 grid
        assert_eq!(map.argmax(), (5, 5));
        let zero = b.attention_map(&img, &["a".into(), "plate".into()]).unwrap();
        assert_eq!(zero.max(), 0.0);
    }

    #[test]
    fn attention_bump_on_pixel_grid() {
        let mut fx = fixture();
        fx.attention_grid = [100, 100];
        let b = MockBackend::from_fixture(&fx).unwrap();
        let img = b.catalog().get("table").unwrap().clone();
        let phrase: Vec<String> = "pizza is on the table".split(' ').map(String::from).collect();
        assert_eq!(b.attention_map(&img, &phrase).unwrap().argmax(), (50, 50));
    }

    #[test]
    fn region_features_are_stable() {
        let (b, img) = setup();
        let r = RawBox::new(0.0, 0.0, 50.0, 50.0).unwrap();
        let f1 = b.region_feature(&img, &r).unwrap();
        let f2 = b.region_feature(&img, &r).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(f1.dim(), 4);
        assert_eq!(b.region_feature(&img, &img.frame()).unwrap(), img.feature);
    }

    #[test]
    fn schema_is_checked() {
        assert!(Fixture::from_json(r#"{"schema": 2, "vocab": ["a"], "images": []}"#).is_err());
    }
}
