use std::sync::Arc;

use narrative_core::backends::{AnswerDistribution, AttentionMap, RawBox, Vocabulary};
use narrative_core::converter::QType;
use narrative_core::selector::{attention_to_box, is_eligible, magnify_box, EligibilityConfig};
use proptest::prelude::*;

fn vocab(n: usize) -> Arc<Vocabulary> {
    Arc::new(Vocabulary::synthetic(n))
}

fn distribution() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 2..12).prop_filter("non-zero mass", |w| w.iter().sum::<f64>() > 1e-9)
}

fn qtype() -> impl Strategy<Value = QType> {
    prop_oneof![Just(QType::YesNo), Just(QType::Number), Just(QType::WhOther)]
}

fn image_and_box() -> impl Strategy<Value = ((f64, f64), RawBox)> {
    (1.0f64..2000.0, 1.0f64..2000.0)
        .prop_flat_map(|(w, h)| {
            (Just((w, h)), 0.0..w, 0.0..h, 0.0f64..1.0, 0.0f64..1.0)
        })
        .prop_filter_map("positive area", |((w, h), x0, y0, fx, fy)| {
            let x1 = x0 + (w - x0) * fx;
            let y1 = y0 + (h - y0) * fy;
            RawBox::new(x0, y0, x1, y1).ok().filter(|b| b.area() > 0.0).map(|b| ((w, h), b))
        })
}

const CFG: EligibilityConfig = EligibilityConfig {
    alpha_threshold: 0.33,
    exclude_yes_no: true,
    max_attempts: 10,
};

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn eligibility_is_strict_threshold_without_yes_no(w in distribution(), qt in qtype()) {
        let dist = AnswerDistribution::from_weights(vocab(w.len()), w).unwrap();
        let max = dist.probs().iter().copied().fold(0.0, f64::max);
        let expected = qt != QType::YesNo && max < 0.33;
        prop_assert_eq!(is_eligible(&dist, qt, &CFG), expected);
    }

    #[test]
    fn magnified_box_contains_and_stays_inside((dims, b) in image_and_box(), alpha in 0.0f64..3.0) {
        let m = magnify_box(&b, dims, alpha).unwrap();
        prop_assert!(m.contains(&b));
        prop_assert!(m.within(dims.0, dims.1));
        prop_assert_eq!(magnify_box(&b, dims, 0.0).unwrap(), b);
    }

    #[test]
    fn magnification_is_monotone((dims, b) in image_and_box(), a1 in 0.0f64..3.0, a2 in 0.0f64..3.0) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let small = magnify_box(&b, dims, lo).unwrap();
        let large = magnify_box(&b, dims, hi).unwrap();
        prop_assert!(large.contains(&small));
    }
}

#[test]
fn max_at_threshold_is_ineligible() {
    let dist = AnswerDistribution::new(vocab(4), vec![0.33, 0.33, 0.33, 0.01]).unwrap();
    assert!(!is_eligible(&dist, QType::WhOther, &CFG));
    let dist = AnswerDistribution::new(vocab(4), vec![0.32, 0.32, 0.32, 0.04]).unwrap();
    assert!(is_eligible(&dist, QType::WhOther, &CFG));
    assert!(!is_eligible(&dist, QType::YesNo, &CFG));
}

#[test]
fn central_box_magnifies_by_a_quarter() {
    let b = RawBox::new(40.0, 40.0, 60.0, 60.0).unwrap();
    assert_eq!(magnify_box(&b, (100.0, 100.0), 0.25).unwrap(), RawBox::new(35.0, 35.0, 65.0, 65.0).unwrap());
}

#[test]
fn magnification_clamps_at_the_border() {
    let b = RawBox::new(0.0, 90.0, 20.0, 100.0).unwrap();
    assert_eq!(magnify_box(&b, (100.0, 100.0), 0.5).unwrap(), RawBox::new(0.0, 85.0, 30.0, 100.0).unwrap());
}

#[test]
fn single_hot_cell_maps_to_its_pixels() {
    let mut map = AttentionMap::zeros(10, 10);
    map.set(4, 3, 1.0);
    assert_eq!(attention_to_box(&map, (100.0, 100.0), 0.5).unwrap(), RawBox::new(30.0, 40.0, 40.0, 50.0).unwrap());
}
