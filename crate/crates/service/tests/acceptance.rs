//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use narrative_core::backends::{AnswerDistribution, FeatureVector, RawBox, Vocabulary};
use narrative_core::converter::{tokenize, Converter, QType};
use narrative_core::evalkit::{bleu, corpus_bleu, run_preference_benchmark, synthetic_population, BenchmarkConfig, Segment};
use narrative_core::pipeline::Narrative;
use narrative_core::preference::{build_pairs, ChoiceRecord, Fusion, Pair, PreferenceModel};
use narrative_core::selector::{is_eligible, magnify_box, EligibilityConfig};
use narrative_service::store;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Converter

const GOLDEN: &[(&str, &str, &str)] = &[
    ("Did he get hurt?", "yes", "He got hurt."),
    ("Is she happy?", "no", "She is not happy."),
    ("Will the boy fall asleep?", "yes", "The boy will fall asleep."),
    ("May he cross the road?", "no", "He may not cross the road."),
    ("How many pens are there?", "2", "There are 2 pens."),
    ("How many people are walking?", "3", "3 people are walking."),
    ("How many pens does he have?", "4", "He has 4 pens."),
    ("Who are they?", "students", "They are students."),
    ("What food is on the table?", "apple", "Apple is on the table."),
    ("Which hand is holding it?", "left", "Left hand is holding it."),
    ("Who would like this?", "dog", "Dog would like this."),
    ("What would the man eat?", "apple", "The man would eat apple."),
    ("Who threw the ball?", "pitcher", "Pitcher threw the ball."),
    ("What is the man eating?", "apple", "The man is eating apple."),
    ("What is the man holding?", "frisbee", "The man is holding frisbee."),
];

fn golden_converter() -> Check {
    let start = Instant::now();
    let converter = Converter::builtin();
    for (q, a, expected) in GOLDEN {
        let got = converter.convert_text(q, a).map_err(|e| format!("{q} / {a}: {e}"))?;
        ensure(got.text == *expected, || format!("{q} / {a}: got {:?}, want {expected:?}", got.text))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("{}/{} exact, {:.1} ms", GOLDEN.len(), GOLDEN.len(), secs * 1e3))
}

const SING: &[&str] = &["the man", "the woman", "the boy", "the girl", "the dog", "he", "she"];
const PLUR: &[&str] = &["the men", "the people", "the dogs", "they", "the children"];
const NOUNS: &[&str] = &["pen", "apple", "ball", "plate", "cup", "hat", "kite", "car", "bus", "tree", "horse", "bird"];
const ADJ: &[&str] = &["happy", "tall", "tired", "wet", "old", "young", "red", "big"];
/// (base, ing, past)
const VERBS: &[(&str, &str, &str)] = &[
    ("eat", "eating", "ate"),
    ("ride", "riding", "rode"),
    ("hold", "holding", "held"),
    ("throw", "throwing", "threw"),
    ("carry", "carrying", "carried"),
    ("wear", "wearing", "wore"),
    ("watch", "watching", "watched"),
    ("catch", "catching", "caught"),
];
const INTRANS: &[(&str, &str)] = &[("walk", "walking"), ("sit", "sitting"), ("run", "running"), ("sleep", "sleeping"), ("stand", "standing")];
const MODALS: &[&str] = &["will", "can", "may", "would", "should", "could"];
const PLACES: &[&str] = &["on the table", "in the car", "near the tree", "under the bench"];

fn pick<T: Clone + std::fmt::Debug + 'static>(xs: &'static [T]) -> impl Strategy<Value = T> + Clone {
    (0..xs.len()).prop_map(move |i| xs[i].clone())
}

fn cap(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// (question, answer, expected type)
fn fuzz_case() -> impl Strategy<Value = (String, String, QType)> {
    let polar = prop_oneof![Just("yes"), Just("no")];
    let yes_no = prop_oneof![
        (pick(SING), pick(ADJ), polar.clone()).prop_map(|(s, a, p)| (format!("Is {s} {a}?"), p)),
        (pick(PLUR), pick(ADJ), polar.clone()).prop_map(|(s, a, p)| (format!("Are {s} {a}?"), p)),
        (pick(SING), pick(VERBS), pick(NOUNS), polar.clone()).prop_map(|(s, v, n, p)| (format!("Is {s} {} the {n}?", v.1), p)),
        (pick(SING), pick(VERBS), pick(NOUNS), polar.clone()).prop_map(|(s, v, n, p)| (format!("Did {s} {} the {n}?", v.0), p)),
        (pick(SING), pick(VERBS), pick(NOUNS), polar.clone()).prop_map(|(s, v, n, p)| (format!("Does {s} {} the {n}?", v.0), p)),
        (pick(MODALS), pick(PLUR), pick(INTRANS), polar).prop_map(|(m, s, v, p)| (format!("{} {s} {}?", cap(m), v.0), p)),
    ]
    .prop_map(|(q, a)| (q, a.to_string(), QType::YesNo));
    let n = (0u32..20).prop_map(|n| n.to_string());
    let number = prop_oneof![
        (pick(NOUNS), n.clone()).prop_map(|(x, n)| (format!("How many {x}s are there?"), n)),
        (pick(NOUNS), pick(PLACES), n.clone()).prop_map(|(x, p, n)| (format!("How many {x}s are {p}?"), n)),
        (pick(PLUR), pick(INTRANS), n.clone()).prop_map(|(s, v, n)| {
            let noun = s.trim_start_matches("the ");
            let noun = if noun == "they" { "people" } else { noun };
            (format!("How many {noun} are {}?", v.1), n)
        }),
        (pick(NOUNS), pick(SING), pick(VERBS), n).prop_map(|(x, s, v, n)| (format!("How many {x}s does {s} {}?", v.0), n)),
    ]
    .prop_map(|(q, a)| (q, a, QType::Number));
    let ans = pick(NOUNS).prop_map(str::to_string);
    let wh = prop_oneof![
        (pick(SING), pick(VERBS), ans.clone()).prop_map(|(s, v, a)| (format!("What is {s} {}?", v.1), a)),
        (pick(PLACES), ans.clone()).prop_map(|(p, a)| (format!("What is {p}?"), a)),
        (pick(VERBS), pick(NOUNS), ans.clone()).prop_map(|(v, n, a)| (format!("Who {} the {n}?", v.2), a)),
        (pick(NOUNS), pick(ADJ)).prop_map(|(n, a)| (format!("What color is the {n}?"), a.to_string())),
        (pick(MODALS), pick(SING), pick(VERBS), ans.clone()).prop_map(|(m, s, v, a)| (format!("What {m} {s} {}?", v.0), a)),
        (pick(NOUNS), pick(PLACES), ans).prop_map(|(n, p, a)| (format!("Which {n} is {p}?"), a)),
    ]
    .prop_map(|(q, a)| (q, a, QType::WhOther));
    prop_oneof![yes_no, number, wh]
}

fn negations(sentence: &str) -> usize {
    tokenize(sentence)
        .iter()
        .filter(|t| t.eq_ignore_ascii_case("not") || t.eq_ignore_ascii_case("n't"))
        .count()
}

fn fuzzed_converter() -> Check {
    let converter = Converter::builtin();
    let strategy = fuzz_case();
    let mut runner = TestRunner::deterministic();
    let (mut panics, mut failures) = (0, Vec::new());
    let mut by_type = [0usize; 3];
    for _ in 0..1000 {
        let (q, a, qt) = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        by_type[qt as usize] += 1;
        let result = catch_unwind(AssertUnwindSafe(|| {
            let parsed = converter.parse_question(&q).map_err(|e| e.to_string())?;
            if parsed.qtype() != qt {
                return Err(format!("typed {:?}", parsed.qtype()));
            }
            let s = converter.convert_text(&q, &a).map_err(|e| e.to_string())?;
            if !s.text.ends_with('.') {
                return Err(format!("{:?} lacks a final period", s.text));
            }
            if qt != QType::YesNo && !s.text.to_lowercase().contains(&a.to_lowercase()) {
                return Err(format!("{:?} lacks the answer", s.text));
            }
            let want = usize::from(qt == QType::YesNo && a == "no");
            if negations(&s.text) != want {
                return Err(format!("{:?} has {} negations", s.text, negations(&s.text)));
            }
            Ok(())
        }));
        match result {
            Err(_) => panics += 1,
            Ok(Err(e)) => failures.push(format!("{q} / {a}: {e}")),
            Ok(Ok(())) => {}
        }
    }
    ensure(panics == 0 && failures.is_empty(), || {
        format!("{panics} panics, {} failures, first: {:?}", failures.len(), failures.first())
    })?;
    Ok(format!("1000 cases (yes/no {}, number {}, other {}), 0 panics", by_type[0], by_type[1], by_type[2]))
}

// Selector

fn eligibility() -> Check {
    let cfg = EligibilityConfig {
        alpha_threshold: 0.33,
        exclude_yes_no: true,
        max_attempts: 10,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let types = [QType::YesNo, QType::Number, QType::WhOther];
    let mut eligible = 0;
    for i in 0..10_000 {
        let n = rng.random_range(2..12);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0) + 1e-9).collect();
        let dist = AnswerDistribution::from_weights(Arc::new(Vocabulary::synthetic(n)), weights).map_err(|e| e.to_string())?;
        let qt = types[rng.random_range(0..3)];
        let max = dist.probs().iter().copied().fold(0.0, f64::max);
        let want = qt != QType::YesNo && max < 0.33;
        let got = is_eligible(&dist, qt, &cfg);
        ensure(got == want, || format!("case {i}: max {max}, {qt:?}: got {got}"))?;
        eligible += usize::from(got);
    }
    let vocab = Arc::new(Vocabulary::synthetic(4));
    let at = AnswerDistribution::new(vocab.clone(), vec![0.33, 0.33, 0.33, 0.01]).map_err(|e| e.to_string())?;
    ensure(!is_eligible(&at, QType::WhOther, &cfg), || "max == 0.33 judged eligible".into())?;
    let below = AnswerDistribution::new(vocab, vec![0.32, 0.32, 0.32, 0.04]).map_err(|e| e.to_string())?;
    ensure(is_eligible(&below, QType::WhOther, &cfg), || "flat distribution judged ineligible".into())?;
    ensure(!is_eligible(&below, QType::YesNo, &cfg), || "yes/no judged eligible".into())?;
    Ok(format!("10000 distributions agree ({eligible} eligible); max == 0.33 ineligible"))
}

fn geometry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for i in 0..10_000 {
        let (w, h) = (rng.random_range(1.0..2000.0), rng.random_range(1.0..2000.0));
        let (x0, y0) = (rng.random_range(0.0..w * 0.99), rng.random_range(0.0..h * 0.99));
        let x1 = rng.random_range(x0..w) + 1e-9;
        let y1 = rng.random_range(y0..h) + 1e-9;
        let b = RawBox::new(x0, y0, x1.min(w), y1.min(h)).map_err(|e| e.to_string())?;
        let (a1, a2): (f64, f64) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
        let (lo, hi) = (a1.min(a2), a1.max(a2));
        let small = magnify_box(&b, (w, h), lo).map_err(|e| e.to_string())?;
        let large = magnify_box(&b, (w, h), hi).map_err(|e| e.to_string())?;
        let same = magnify_box(&b, (w, h), 0.0).map_err(|e| e.to_string())?;
        ensure(small.contains(&b) && small.within(w, h), || format!("case {i}: {small} vs {b}"))?;
        ensure(large.contains(&small), || format!("case {i}: not monotone"))?;
        ensure(same == b, || format!("case {i}: alpha 0 moved {b} to {same}"))?;
    }
    let center = magnify_box(&RawBox::new(40.0, 40.0, 60.0, 60.0).unwrap(), (100.0, 100.0), 0.25).map_err(|e| e.to_string())?;
    ensure(center == RawBox::new(35.0, 35.0, 65.0, 65.0).unwrap(), || format!("(40,40,60,60) became {center}"))?;
    Ok("10000 boxes contained, in bounds, identity at 0, monotone; (40,40,60,60) -> (35,35,65,65)".into())
}

// Preference

fn oracle_loss(params: &[f64], pairs: &[Pair], vocab: usize) -> f64 {
    let input = |p: &Pair| {
        let mut x = Vec::new();
        x.extend_from_slice(p.source.image_feature.values());
        x.extend_from_slice(p.source.question_feature.values());
        x.extend((0..vocab).map(|i| f64::from(u8::from(i == p.source.answer))));
        x.extend_from_slice(p.target.image_feature.values());
        x.extend_from_slice(p.target.question_feature.values());
        x
    };
    let d = input(&pairs[0]).len();
    let (w, b) = params.split_at(vocab * d);
    let mut total = 0.0;
    for p in pairs {
        let x = input(p);
        let z: Vec<f64> = (0..vocab).map(|v| (0..d).map(|j| w[v * d + j] * x[j]).sum::<f64>() + b[v]).collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        total += m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - z[p.target.answer];
    }
    total / pairs.len() as f64
}

fn gradient_relative_error() -> Result<f64, String> {
    let (img, q, vocab) = (3, 4, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vec = |n: usize, rng: &mut ChaCha8Rng| FeatureVector::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let mut records = Vec::new();
    for u in 0..3 {
        for _ in 0..4 {
            let answer = rng.random_range(0..vocab);
            let (fi, fq) = (vec(img, &mut rng), vec(q, &mut rng));
            records.push(ChoiceRecord::new(format!("u{u}"), fi, fq, answer, vocab).map_err(|e| e.to_string())?);
        }
    }
    let pairs = build_pairs(&records);
    let mut model = PreferenceModel::zeros(img, q, vocab, Fusion::Concat).map_err(|e| e.to_string())?;
    let params: Vec<f64> = model.parameters().iter().map(|_| rng.random_range(-0.5..0.5)).collect();
    model.set_parameters(&params).map_err(|e| e.to_string())?;
    let grad = model.gradient(&pairs).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let fd: Vec<f64> = (0..params.len())
        .map(|i| {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            plus[i] += h;
            minus[i] -= h;
            (oracle_loss(&plus, &pairs, vocab) - oracle_loss(&minus, &pairs, vocab)) / (2.0 * h)
        })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
    Ok(norm(&diff) / (norm(&grad) + norm(&fd)))
}

fn preference_benchmark() -> Check {
    let start = Instant::now();
    let cfg = BenchmarkConfig::default();
    ensure((cfg.users, cfg.choices_per_user, cfg.noise, cfg.vocab_size) == (50, 10, 0.1, 10), || format!("{cfg:?}"))?;
    let records = synthetic_population(&cfg).map_err(|e| e.to_string())?;
    let r = run_preference_benchmark(&records, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let rel = gradient_relative_error()?;
    let summary = format!(
        "consistent {:.3}, shuffled {:.3}, question-zeroed {:.3}, {secs:.1} s, gradient rel err {rel:.1e}",
        r.consistent_acc, r.shuffled_acc, r.image_only_acc
    );
    ensure(r.consistent_minus_shuffled >= 0.10, || format!("gap to shuffled below 10pp: {summary}"))?;
    ensure(r.consistent_acc > r.image_only_acc, || format!("question-zeroed not beaten: {summary}"))?;
    ensure(secs < 60.0, || format!("too slow: {summary}"))?;
    ensure(rel < 1e-4, || format!("gradient mismatch: {summary}"))?;
    Ok(summary)
}

// Pipeline

fn check_narrative(n: &Narrative, what: &str) -> Result<(), String> {
    let texts = n.texts();
    let unique: BTreeSet<&str> = texts.iter().copied().collect();
    ensure(unique.len() == texts.len(), || format!("{what}: duplicate sentence in {texts:?}"))?;
    ensure(n.provenance.len() == n.sentences.len(), || format!("{what}: provenance count mismatch"))?;
    for (s, qa) in n.sentences.iter().zip(&n.provenance) {
        ensure(s.question == qa.question.raw() && s.answer == qa.answer.label(), || {
            format!("{what}: {:?} lacks matching provenance", s.text)
        })?;
    }
    Ok(())
}

fn pipeline_determinism() -> Check {
    let (pipeline, catalog) = common::demo_pipeline();
    let (mut auto, mut answered) = (0, 0);
    for id in common::ALL_IMAGES {
        let image = catalog.get(id).unwrap();
        let runs: Vec<String> = (0..3)
            .map(|_| serde_json::to_string(&pipeline.narrate_auto(image).map_err(|e| format!("{id}: {e}"))?).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        ensure(runs.iter().all(|r| r == &runs[0]), || format!("{id}: narrate_auto differs between runs"))?;
        check_narrative(&pipeline.narrate_auto(image).unwrap(), id)?;
        auto += 1;
        let Ok(iq) = pipeline.next_interactive_question(image) else { continue };
        for label in &iq.choices {
            let what = format!("{id}/{label}");
            let runs: Vec<String> = (0..3)
                .map(|_| {
                    let n = pipeline.submit_answer(image, &iq.question, label).map_err(|e| format!("{what}: {e}"))?;
                    serde_json::to_string(&n).map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            ensure(runs.iter().all(|r| r == &runs[0]), || format!("{what}: submit_answer differs between runs"))?;
            check_narrative(&pipeline.submit_answer(image, &iq.question, label).unwrap(), &what)?;
            answered += 1;
        }
    }
    Ok(format!("{auto} auto and {answered} answered narratives identical over 3 runs, unique, with provenance"))
}

// Evaluation

fn bleu_checks() -> Check {
    let text = ["The man is riding motorcycle.", "The motorcycle is red."];
    let same = bleu(&text, &[text.join(" ")], 4).map_err(|e| e.to_string())?;
    for n in 1..=4 {
        let v = same.bleu(n).unwrap();
        ensure((v - 100.0).abs() < 1e-9, || format!("identity BLEU-{n} = {v}"))?;
    }
    let disjoint = bleu(&["Zebra is thinking."], &["A red bus waits outside."], 4).map_err(|e| e.to_string())?;
    ensure(disjoint.bleu(1) == Some(0.0), || format!("disjoint BLEU-1 = {:?}", disjoint.bleu(1)))?;
    let seg = |c: &str, r: &str| Segment {
        candidate: c.into(),
        references: vec![r.into()],
    };
    let s = corpus_bleu(&[seg("The cat sat on the mat.", "The cat is on the mat."), seg("A dog runs.", "A dog runs fast.")], 4)
        .map_err(|e| e.to_string())?;
    let bp = (1.0f64 - 10.0 / 9.0).exp();
    let want = [100.0 * bp * 8.0 / 9.0, 100.0 * bp * (8.0 / 9.0 * 5.0 / 7.0f64).sqrt()];
    for (n, w) in want.iter().enumerate() {
        let got = s.bleu(n + 1).unwrap();
        ensure((got - w).abs() < 1e-6, || format!("hand case BLEU-{}: {got} vs {w}", n + 1))?;
    }
    Ok(format!("identity 100 at n=1..4, disjoint 0, hand case BLEU-1 {:.4} BLEU-2 {:.4}", want[0], want[1]))
}

// Service

fn service_replay() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s = common::demo_service_with(dir.path(), 13);
    common::random_sessions(&s, 100, 2024);
    let live = s.store().sessions();
    ensure(live.len() == 100, || format!("{} sessions", live.len()))?;
    let replayed = store::replay(dir.path()).map_err(|e| e.to_string())?;
    ensure(replayed == live, || "event replay differs from live sessions".into())?;
    let reopened = store::SessionStore::open(dir.path(), 13).map_err(|e| e.to_string())?.sessions();
    ensure(reopened == live, || "snapshot reopen differs from live sessions".into())?;
    let count = |src: store::NarrativeSource| live.values().flat_map(|x| &x.history).filter(|h| h.source == src).count();
    let (auto, answered, personalized) = (
        count(store::NarrativeSource::Auto),
        count(store::NarrativeSource::Answer),
        count(store::NarrativeSource::Personalized),
    );
    ensure(answered > 0 && personalized > 0, || "random mix never answered or personalized".into())?;
    Ok(format!(
        "100 sessions ({auto} auto, {answered} answered, {personalized} personalized narratives) rebuilt exactly from the log and from snapshot"
    ))
}

fn service_idempotency() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s = common::demo_service(dir.path());
    let mut repeats = 0;
    for image in common::QUESTION_IMAGES {
        let v = s.create_session("ann", image).map_err(|e| e.to_string())?;
        let label = v.question.unwrap().choices[1].clone();
        let first = s.post_answer(&v.id, &label, Some("once")).map_err(|e| e.to_string())?;
        let snapshot = s.get_session(&v.id).map_err(|e| e.to_string())?;
        for other in ["", "something else", &label] {
            let again = s.post_answer(&v.id, other, Some("once")).map_err(|e| e.to_string())?;
            ensure(again == first, || format!("{image}: duplicate request changed the response"))?;
            repeats += 1;
        }
        ensure(s.get_session(&v.id).unwrap() == snapshot, || format!("{image}: duplicate request changed the session"))?;
    }
    let logged = s.choices(Some("ann")).map_err(|e| e.to_string())?.len();
    ensure(logged == common::QUESTION_IMAGES.len(), || format!("{logged} choices logged"))?;
    Ok(format!("{repeats} duplicate deliveries returned the original response with no new events"))
}

fn service_concurrency() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s = common::demo_service(dir.path());
    let images = common::QUESTION_IMAGES;
    let results: Vec<Result<(usize, String, String), String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..50)
            .map(|i| {
                let s = &s;
                scope.spawn(move || {
                    let v = s.create_session(&format!("user-{i:02}"), images[i % images.len()]).map_err(|e| e.to_string())?;
                    let q = v.question.ok_or("no question")?;
                    let label = q.choices[i % q.choices.len()].clone();
                    s.post_answer(&v.id, &label, Some(&format!("req-{i}"))).map_err(|e| e.to_string())?;
                    Ok((i, v.id, label))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("thread panicked".into()))).collect()
    });
    let ref_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let reference = common::demo_service(ref_dir.path());
    for r in results {
        let (i, id, label) = r?;
        let (user, image) = (format!("user-{i:02}"), images[i % images.len()]);
        let view = s.get_session(&id).map_err(|e| e.to_string())?;
        ensure(view.user_id == user && view.history.len() == 1, || format!("{id}: foreign state"))?;
        let h = &view.history[0];
        ensure(h.image_id == image && h.answer.as_ref() == Some(&label), || format!("{id}: wrong answer recorded"))?;
        let rid = reference.create_session("ref", image).unwrap().id;
        let expected = reference.post_answer(&rid, &label, None).unwrap().narrative;
        ensure(h.narrative == expected, || format!("{id}: narrative differs from a sequential run"))?;
        let records = s.choices(Some(&user)).map_err(|e| e.to_string())?;
        ensure(records.len() == 1 && records[0].image_id.as_deref() == Some(image), || format!("{user}: choice log mixed"))?;
    }
    ensure(store::replay(dir.path()).map_err(|e| e.to_string())? == s.store().sessions(), || "replay differs".into())?;
    Ok("50 concurrent sessions, each holding only its own user, answer, narrative and choice".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("converter golden pairs", golden_converter),
        ("converter fuzzed questions", fuzzed_converter),
        ("selector eligibility", eligibility),
        ("selector geometry", geometry),
        ("preference benchmark", preference_benchmark),
        ("pipeline determinism", pipeline_determinism),
        ("evalkit bleu", bleu_checks),
        ("service replay", service_replay),
        ("service idempotency", service_idempotency),
        ("service concurrency", service_concurrency),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
