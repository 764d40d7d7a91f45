mod common;

use common::BlockSynthesizer;
use defectkit_core::config::PipelineConfig;
use defectkit_core::model::{DefectGroup, ImageLabel, ModalityId, Origin, Patch};
use defectkit_core::stream::{
    split_groups, FractionSchedule, GroupFilter, ItemSource, MixedStream, PatchListSource, RealDefect, StreamSettings,
};
use defectkit_core::{derive_rng, Fraction};
use image::GrayImage;
use proptest::prelude::*;
use rand::Rng;

fn fraction(max_denom: u32) -> impl Strategy<Value = Fraction> {
    (1..=max_denom).prop_flat_map(|d| (0..=d).prop_map(move |n| Fraction::new(n, d).unwrap()))
}

prop_compose! {
    fn config()(
        seed in 0u64..=i64::MAX as u64,
        stride in 1u32..=256,
        p_inject in fraction(64).prop_filter("below 1/2", |f| *f < Fraction::HALF),
        r_syn in fraction(16),
        fractions in prop::collection::vec(fraction(32), 1..6),
        apply_prob in 0.80f64..=0.95,
        rotation in 0.0f64..90.0,
        border in 0u32..8,
        factor in 0.5f64..2.0,
    ) -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.seed = seed;
        c.geometry.stride = stride;
        c.stream.p_inject = p_inject;
        c.stream.r_syn = r_syn;
        c.stream.fractions = fractions;
        let lsm1 = c.modality.get_mut(&ModalityId::Lsm1).unwrap();
        lsm1.augment.apply_prob = apply_prob;
        lsm1.augment.rotation_deg = rotation;
        lsm1.border_crop = border;
        lsm1.preprocess.brightness_factor = factor;
        c
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips_through_toml(c in config()) {
        prop_assume!(c.validate().is_ok());
        let text = c.to_toml_string().unwrap();
        let back = PipelineConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash_hex().unwrap(), c.hash_hex().unwrap());
    }

    #[test]
    fn fractions_nest_for_any_pool(n in 1usize..3000, seed in any::<u64>(), points_share in 0.0f64..1.0) {
        let mut rng = derive_rng(seed, &[0]);
        let groups: Vec<DefectGroup> = (0..n)
            .map(|_| if rng.random_bool(points_share) { DefectGroup::Points } else { DefectGroup::Area })
            .collect();
        let schedule = FractionSchedule::new(PipelineConfig::default().stream.fractions, GroupFilter::Mixed);
        let split = split_groups(&groups, seed, &schedule).unwrap();
        let mut prev: &[usize] = &[];
        for f in &schedule.fractions {
            let cur = split.indices(*f).unwrap();
            prop_assert_eq!(cur.len(), f.floor_of(n));
            prop_assert!(cur.starts_with(prev));
            prev = cur;
        }
    }

    #[test]
    fn composition_counts_sum_to_n(p_num in 0u32..16, r in fraction(8), n in 0usize..300, seed in any::<u64>()) {
        let stream = stream_with(Fraction::new(p_num, 32).unwrap(), r, 2, seed);
        let (items, summary) = stream.emit_epoch(n).unwrap();
        prop_assert_eq!(summary.total, n);
        prop_assert_eq!(summary.by_source.values().sum::<usize>(), n);
        prop_assert_eq!(items.len(), n);
        for item in &items {
            match item.source {
                ItemSource::Synthetic => prop_assert!(!item.mask.as_ref().unwrap().is_empty()),
                ItemSource::FaultFree => prop_assert!(item.mask.as_ref().unwrap().is_empty()),
                ItemSource::Real => prop_assert!(item.mask.is_none() && item.label.is_defective()),
            }
        }
    }
}

fn stream_with(
    p_inject: Fraction,
    r_syn: Fraction,
    n_real: usize,
    seed: u64,
) -> MixedStream<PatchListSource, BlockSynthesizer> {
    let config = PipelineConfig::default();
    let modality = ModalityId::Lsm2;
    let mut settings = StreamSettings::from_config(&config, modality).unwrap();
    settings.p_inject = p_inject;
    settings.r_syn = r_syn;
    let real = (0..n_real)
        .map(|i| RealDefect {
            patch: Patch::new(
                GrayImage::from_pixel(512, 512, image::Luma([30 * i as u8])),
                modality,
                Origin::default(),
            )
            .unwrap(),
            label: ImageLabel::Defective(DefectGroup::Area),
        })
        .collect();
    let source = PatchListSource::new((0..3).map(|s| common::textured_patch(modality, s)).collect()).unwrap();
    MixedStream::new(source, BlockSynthesizer, real, settings, seed).unwrap()
}

#[test]
fn sequence_does_not_depend_on_consumption() {
    let p = Fraction::new(1, 8).unwrap();
    let a = stream_with(p, Fraction::HALF, 3, 11);
    let (epoch, _) = a.emit_epoch(600).unwrap();
    let mut b = stream_with(p, Fraction::HALF, 3, 11);
    let mut streamed = Vec::new();
    b.for_each_item(600, |it| {
        streamed.push(it);
        Ok(())
    })
    .unwrap();
    for (i, e) in epoch.iter().enumerate() {
        let n = b.next_item().unwrap();
        for other in [&n, &streamed[i]] {
            assert_eq!(other.index, e.index);
            assert_eq!(other.patch, e.patch);
            assert_eq!(other.mask, e.mask);
            assert_eq!(other.source, e.source);
        }
    }
    // a single item can be recomputed out of order
    assert_eq!(a.item(417).unwrap().patch, epoch[417].patch);
}

#[test]
fn zero_injection_yields_no_real_items() {
    let s = stream_with(Fraction::ZERO, Fraction::HALF, 3, 2);
    let (_, summary) = s.emit_epoch(500).unwrap();
    assert_eq!(summary.source_count(ItemSource::Real), 0);
}

#[test]
fn empty_fraction_disables_injection_with_warning() {
    let s = stream_with(Fraction::new(1, 4).unwrap(), Fraction::HALF, 0, 2);
    let (_, summary) = s.emit_epoch(400).unwrap();
    assert_eq!(summary.source_count(ItemSource::Real), 0);
    assert!(!summary.warnings.is_empty());
}

#[test]
fn injection_at_half_requires_force() {
    let config = PipelineConfig::default();
    let mut settings = StreamSettings::from_config(&config, ModalityId::Asm).unwrap();
    settings.p_inject = Fraction::HALF;
    let source = || PatchListSource::new(vec![common::textured_patch(ModalityId::Asm, 0)]).unwrap();
    assert!(MixedStream::new(source(), BlockSynthesizer, vec![], settings.clone(), 0).is_err());
    settings.force = true;
    let s = MixedStream::new(source(), BlockSynthesizer, vec![], settings, 0).unwrap();
    assert!(s.warnings().iter().any(|w| w.contains("1/2")));
}

#[test]
fn empty_config_has_published_settings() {
    let c = PipelineConfig::from_toml_str("").unwrap();
    assert_eq!(c.stream.p_inject, Fraction::new(1, 32).unwrap());
    assert_eq!(c.stream.r_syn, Fraction::HALF);
    assert_eq!(c.geometry.stride, 160);
    assert_eq!(c.modality[&ModalityId::Lsm1].preprocess.brightness_factor, 1.5);
}

#[test]
fn neighbouring_paths_diverge_early() {
    let mut a = derive_rng(42, &[0]);
    let mut b = derive_rng(42, &[1]);
    let differ = (0..1000).any(|_| a.random::<u64>() != b.random::<u64>());
    assert!(differ);
}

#[test]
fn shipped_default_config_matches_builtin() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let shipped = defectkit_core::load_config(&path).unwrap();
    assert_eq!(shipped, PipelineConfig::default());
}
