mod common;

use common::*;
use defectkit_core::derive_rng;
use defectkit_core::metrics::{
    auroc, confusion, connected_components, evaluate, mcc, optimal_f1_threshold, pixel_auroc, pro_score,
    ConfusionCounts, EvaluateOptions, ScoreMap, ScoredSample,
};
use defectkit_core::model::{BinaryMask, DefectGroup, ImageLabel};
use proptest::prelude::*;

fn scored() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((prop_oneof![(0i32..6).prop_map(|v| v as f64 / 2.0), -5.0f64..5.0], any::<bool>()), 1..100)
}

fn counts() -> impl Strategy<Value = ConfusionCounts> {
    (0u64..5000, 0u64..5000, 0u64..5000, 0u64..5000).prop_map(|(tn, tp, f, fp)| ConfusionCounts::new(tn, tp, f, fp))
}

fn mask(w: u32, h: u32) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec(any::<bool>(), (w * h) as usize).prop_map(move |v| BinaryMask::from_vec(w, h, v).unwrap())
}

proptest! {
    #[test]
    fn mcc_symmetric_under_class_swap(c in counts()) {
        let swapped = ConfusionCounts::new(c.tp, c.tn, c.fp, c.fn_);
        prop_assert!((mcc(&c) - mcc(&swapped)).abs() < 1e-12);
    }

    #[test]
    fn mcc_negates_under_label_inversion(c in counts()) {
        // relabeling every sample flips tp<->fn and tn<->fp
        let inverted = ConfusionCounts::new(c.fp, c.fn_, c.tp, c.tn);
        prop_assert!((mcc(&c) + mcc(&inverted)).abs() < 1e-12);
    }

    #[test]
    fn mcc_matches_definition(c in counts()) {
        prop_assert!((mcc(&c) - mcc_oracle(c.tn, c.tp, c.fn_, c.fp)).abs() < 1e-9);
    }

    #[test]
    fn auroc_invariant_under_monotone_maps(s in scored(), a in 0.1f64..10.0, b in -10.0f64..10.0, cube in any::<bool>()) {
        let mapped: Vec<(f64, bool)> = s.iter()
            .map(|&(v, p)| (if cube { v.powi(3) + a * v } else { a * v + b }, p))
            .collect();
        match (auroc(&s), auroc(&mapped)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn auroc_matches_mann_whitney(s in scored()) {
        match (auroc(&s), mann_whitney(&s)) {
            (Ok(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (Err(_), None) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn optimal_threshold_beats_every_candidate(s in scored()) {
        prop_assume!(s.iter().any(|x| x.1));
        let choice = optimal_f1_threshold(&s).unwrap();
        let (_, tp, fn_, fp) = tally(&s, choice.threshold);
        let best = f1_from(tp, fp, fn_);
        prop_assert!((best - choice.f1).abs() < 1e-12);
        for &(t, _) in &s {
            let (_, tp, fn_, fp) = tally(&s, t);
            prop_assert!(f1_from(tp, fp, fn_) <= best + 1e-12);
        }
    }

    #[test]
    fn confusion_matches_tally(s in scored(), t in -5.0f64..5.0) {
        let c = confusion(&s, t);
        prop_assert_eq!((c.tn, c.tp, c.fn_, c.fp), tally(&s, t));
    }

    #[test]
    fn components_match_flood_fill(m in (1u32..=16, 1u32..=16).prop_flat_map(|(w, h)| mask(w, h))) {
        let ours: Vec<Vec<(u32, u32)>> = connected_components(&m).into_iter().map(|r| r.pixels).collect();
        prop_assert_eq!(ours, flood_fill_regions(&m));
    }

    #[test]
    fn pro_of_duplicate_set_is_unchanged(pair in (2u32..=16, 2u32..=16).prop_flat_map(|(w, h)| (mask(w, h), mask(w, h)))) {
        let (pred, gt) = pair;
        let one = pro_score(&[pred.clone()], &[gt.clone()]);
        let two = pro_score(&[pred.clone(), pred], &[gt.clone(), gt]);
        match (one, two) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn random_fifty_sample_sets_match_tally() {
    let mut rng = derive_rng(50, &[50]);
    for _ in 0..200 {
        let s = random_scores(&mut rng, 50);
        let t = s[0].0;
        let c = confusion(&s, t);
        assert_eq!((c.tn, c.tp, c.fn_, c.fp), tally(&s, t));
    }
}

#[test]
fn pro_region_example() {
    // a 2x2 region half covered and a 4x4 region fully covered
    let gt = BinaryMask::from_fn(12, 6, |x, y| (x < 2 && y < 2) || ((6..10).contains(&x) && (1..5).contains(&y)));
    let pred = BinaryMask::from_fn(12, 6, |x, y| (x < 2 && y == 0) || ((6..10).contains(&x) && (1..5).contains(&y)));
    assert_eq!(pro_score(&[pred], &[gt]).unwrap(), 0.75);
}

#[test]
fn pixel_auroc_three_random_pairs() {
    let mut rng = derive_rng(8, &[8]);
    use rand::Rng;
    for _ in 0..50 {
        let masks: Vec<BinaryMask> = (0..3).map(|_| random_mask(&mut rng, 8, 8)).collect();
        let maps: Vec<ScoreMap> = (0..3).map(|_| ScoreMap::from_fn(8, 8, |_, _| rng.random_range(0.0..1.0))).collect();
        let pooled: Vec<(f64, bool)> = maps
            .iter()
            .zip(&masks)
            .flat_map(|(m, g)| m.values().iter().zip(g.as_slice()).map(|(&v, &p)| (v as f64, p)))
            .collect();
        match (pixel_auroc(&maps, &masks), mann_whitney(&pooled)) {
            (Ok(a), Some(b)) => assert!((a - b).abs() < 1e-9),
            (Err(_), None) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn map_equal_to_mask_scores_perfectly() {
    let gt = BinaryMask::from_fn(16, 16, |x, y| (x + y) % 5 == 0);
    let map = ScoreMap::from_fn(16, 16, |x, y| if gt.get(x, y) { 1.0 } else { 0.0 });
    assert_eq!(pixel_auroc(&[map], &[gt]).unwrap(), 1.0);
}

/// Samples whose optimal-F1 threshold lands on the given counts: false
/// negatives lowest, then true negatives, true positives, false positives.
fn samples_from_counts(tn: usize, tp: usize, fn_: usize, fp: usize) -> Vec<ScoredSample> {
    let mk = |i: usize, score: f64, defective: bool| ScoredSample {
        id: format!("s{i:05}"),
        image_score: Some(score),
        label: if defective { ImageLabel::Defective(DefectGroup::Area) } else { ImageLabel::Good },
        anomaly_map: None,
        mask: None,
    };
    let mut out = Vec::new();
    for (n, score, defective) in [(fn_, -1.0, true), (tn, 0.0, false), (tp, 1.5, true), (fp, 2.0, false)] {
        for _ in 0..n {
            out.push(mk(out.len(), score, defective));
        }
    }
    out
}

#[test]
fn evaluate_reproduces_first_lsm1_row() {
    let r = evaluate(&samples_from_counts(1459, 73, 22, 11), &EvaluateOptions::default()).unwrap();
    assert_eq!(r.counts, ConfusionCounts::new(1459, 73, 22, 11));
    assert!((r.image.mcc - 0.81).abs() <= 0.005);
    assert!((100.0 * r.image.recall - 76.8).abs() <= 0.05);
    assert!((100.0 * r.image.fpr - 0.7).abs() <= 0.05);
    assert!(r.pixel.is_none());
}

#[test]
fn border_crop_evaluates_the_interior() {
    let gt = BinaryMask::from_fn(256, 256, |x, y| (100..140).contains(&x) && (100..140).contains(&y));
    // a hot frame in the border would be false positives if it were kept
    let map = ScoreMap::from_fn(256, 256, |x, y| {
        if x < 4 || y < 4 || x >= 252 || y >= 252 {
            5.0
        } else if gt.get(x, y) {
            1.0
        } else {
            0.0
        }
    });
    let good = ScoreMap::from_fn(256, 256, |_, _| 0.0);
    let samples = vec![
        ScoredSample {
            id: "d".into(),
            image_score: Some(1.0),
            label: ImageLabel::Defective(DefectGroup::Area),
            anomaly_map: Some(map.clone()),
            mask: Some(gt.clone()),
        },
        ScoredSample {
            id: "g".into(),
            image_score: Some(0.0),
            label: ImageLabel::Good,
            anomaly_map: Some(good),
            mask: None,
        },
    ];
    let cropped = evaluate(&samples, &EvaluateOptions { border_crop: 4 }).unwrap().pixel.unwrap();
    assert_eq!(cropped.auroc, 1.0);
    assert_eq!(map.crop_border(4).unwrap().dimensions(), (248, 248));
    let full = evaluate(&samples, &EvaluateOptions { border_crop: 0 }).unwrap().pixel.unwrap();
    assert!(full.auroc < 1.0);
}

#[test]
fn lowest_scored_single_positive() {
    let mut s: Vec<(f64, bool)> = (0..20).map(|i| (i as f64, false)).collect();
    s.push((-1.0, true));
    let choice = optimal_f1_threshold(&s).unwrap();
    let (best, _) = exhaustive_best_f1(&s);
    assert!((choice.f1 - best).abs() < 1e-12);
    // flagging everything is the only way to recover the positive
    assert_eq!(choice.threshold, f64::NEG_INFINITY);
    assert!((choice.f1 - 2.0 / 22.0).abs() < 1e-12);
}
