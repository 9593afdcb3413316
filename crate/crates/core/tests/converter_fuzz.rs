//! Generated questions drawn from the shapes the rule table covers.

use narrative_core::converter::{tokenize, Converter, QType};
use proptest::prelude::*;

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

#[derive(Debug, Clone)]
struct Case {
    question: String,
    answer: String,
    qtype: QType,
}

fn pick<T: Clone + std::fmt::Debug + 'static>(xs: &'static [T]) -> impl Strategy<Value = T> + Clone {
    (0..xs.len()).prop_map(move |i| xs[i].clone())
}

fn cap(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn yes_no() -> impl Strategy<Value = Case> {
    let answer = prop_oneof![Just("yes"), Just("no")];
    prop_oneof![
        (pick(SING), pick(ADJ), answer.clone()).prop_map(|(s, a, ans)| (format!("Is {s} {a}?"), ans)),
        (pick(PLUR), pick(ADJ), answer.clone()).prop_map(|(s, a, ans)| (format!("Are {s} {a}?"), ans)),
        (pick(SING), pick(VERBS), pick(NOUNS), answer.clone())
            .prop_map(|(s, v, n, ans)| (format!("Is {s} {} the {n}?", v.1), ans)),
        (pick(SING), pick(VERBS), pick(NOUNS), answer.clone())
            .prop_map(|(s, v, n, ans)| (format!("Did {s} {} the {n}?", v.0), ans)),
        (pick(SING), pick(VERBS), pick(NOUNS), answer.clone())
            .prop_map(|(s, v, n, ans)| (format!("Does {s} {} the {n}?", v.0), ans)),
        (pick(MODALS), pick(PLUR), pick(INTRANS), answer)
            .prop_map(|(m, s, v, ans)| (format!("{} {s} {}?", cap(m), v.0), ans)),
    ]
    .prop_map(|(question, ans)| Case {
        question,
        answer: ans.to_string(),
        qtype: QType::YesNo,
    })
}

fn number() -> impl Strategy<Value = Case> {
    let n = (0u32..20).prop_map(|n| n.to_string());
    prop_oneof![
        (pick(NOUNS), n.clone()).prop_map(|(x, n)| (format!("How many {x}s are there?"), n)),
        (pick(NOUNS), pick(PLACES), n.clone()).prop_map(|(x, p, n)| (format!("How many {x}s are {p}?"), n)),
        (pick(PLUR), pick(INTRANS), n.clone()).prop_map(|(s, v, n)| {
            let noun = s.trim_start_matches("the ");
            let noun = if noun == "they" { "people" } else { noun };
            (format!("How many {noun} are {}?", v.1), n)
        }),
        (pick(NOUNS), pick(SING), pick(VERBS), n).prop_map(|(x, s, v, n)| (format!("How many {x}s does {s} {}?", v.0), n)),
    ]
    .prop_map(|(question, answer)| Case {
        question,
        answer,
        qtype: QType::Number,
    })
}

fn wh() -> impl Strategy<Value = Case> {
    let ans = pick(NOUNS).prop_map(str::to_string);
    prop_oneof![
        (pick(SING), pick(VERBS), ans.clone()).prop_map(|(s, v, a)| (format!("What is {s} {}?", v.1), a)),
        (pick(PLACES), ans.clone()).prop_map(|(p, a)| (format!("What is {p}?"), a)),
        (pick(VERBS), pick(NOUNS), ans.clone()).prop_map(|(v, n, a)| (format!("Who {} the {n}?", v.2), a)),
        (pick(NOUNS), pick(ADJ)).prop_map(|(n, a)| (format!("What color is the {n}?"), a.to_string())),
        (pick(MODALS), pick(SING), pick(VERBS), ans.clone())
            .prop_map(|(m, s, v, a)| (format!("What {m} {s} {}?", v.0), a)),
        (pick(NOUNS), pick(PLACES), ans).prop_map(|(n, p, a)| (format!("Which {n} is {p}?"), a)),
    ]
    .prop_map(|(question, answer)| Case {
        question,
        answer,
        qtype: QType::WhOther,
    })
}

fn negations(sentence: &str) -> usize {
    tokenize(sentence)
        .iter()
        .filter(|t| t.eq_ignore_ascii_case("not") || t.eq_ignore_ascii_case("n't"))
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn generated_pairs_convert(case in prop_oneof![yes_no(), number(), wh()]) {
        let converter = Converter::builtin();
        let q = converter.parse_question(&case.question).unwrap();
        prop_assert_eq!(q.qtype(), case.qtype, "{}", case.question);
        let s = converter.convert_text(&case.question, &case.answer)
            .unwrap_or_else(|e| panic!("{} / {}: {e}", case.question, case.answer));
        prop_assert!(s.text.ends_with('.'), "{}", s.text);
        if case.qtype != QType::YesNo {
            prop_assert!(s.text.to_lowercase().contains(&case.answer.to_lowercase()), "{}", s.text);
        }
        let expect_neg = usize::from(case.qtype == QType::YesNo && case.answer == "no");
        prop_assert_eq!(negations(&s.text), expect_neg, "{} / {} -> {}", case.question, case.answer, s.text);
    }
}
