//! The mixed supervised training stream.
//!
//! Item `i` is produced from `scope.child(i)` alone:
//!
//! 1. draw a fault-free patch from the source;
//! 2. with probability `r_syn`, turn it into a synthetic defect;
//! 3. independently, with probability `p_inject`, replace the whole item by a
//!    real defect from the active fraction, freshly cropped and augmented.
//!
//! The injection decision is taken after the synthesis decision, so the
//! fault-free/synthetic balance refers to the stream before replacement.
//! Real items carry only an image-level label.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Fraction, PipelineConfig};
use crate::error::{Error, Result};
use crate::model::{DefectGroup, GroundTruthMask, ImageLabel, ModalityId, Patch};
use crate::pipeline::{augment, crop_defect_window, AugmentationSpec, CropWindow};
use crate::rng::{derive_rng, stage, SeedScope, StreamRng};
use crate::synth::{synthesize, SynthesisRanges};

const DRAW_SOURCE: u64 = 0;
const DRAW_SYNTH: u64 = 1;
const DRAW_DECISIONS: u64 = 2;
const DRAW_REAL: u64 = 3;

/// A weakly labeled real defect, stored at raw crop size.
#[derive(Clone, Debug)]
pub struct RealDefect {
    pub patch: Patch,
    pub label: ImageLabel,
}

impl RealDefect {
    pub fn group(&self) -> DefectGroup {
        self.label.defect_group().expect("real defects are always defective")
    }
}

#[derive(Clone, Debug)]
pub struct RealDefectPool {
    items: Vec<RealDefect>,
    shuffle_seed: u64,
}

impl RealDefectPool {
    pub fn new(items: Vec<RealDefect>, shuffle_seed: u64) -> Result<Self> {
        for (i, item) in items.iter().enumerate() {
            if !item.label.is_defective() {
                return Err(Error::InvalidInput(format!("pool item {i} is labeled good")));
            }
        }
        Ok(Self { items, shuffle_seed })
    }

    pub fn items(&self) -> &[RealDefect] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFilter {
    Points,
    Area,
    Mixed,
}

impl GroupFilter {
    fn admits(self, group: DefectGroup) -> bool {
        match self {
            GroupFilter::Mixed => true,
            GroupFilter::Points => group == DefectGroup::Points,
            GroupFilter::Area => group == DefectGroup::Area,
        }
    }
}

impl std::str::FromStr for GroupFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "points" => Ok(GroupFilter::Points),
            "area" => Ok(GroupFilter::Area),
            "mixed" => Ok(GroupFilter::Mixed),
            _ => Err(Error::InvalidInput(format!("unknown group filter `{s}` (points, area or mixed)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionSchedule {
    pub fractions: Vec<Fraction>,
    pub group: GroupFilter,
}

impl FractionSchedule {
    pub fn new(fractions: Vec<Fraction>, group: GroupFilter) -> Self {
        Self { fractions, group }
    }

    pub fn from_config(config: &PipelineConfig, group: GroupFilter) -> Self {
        Self::new(config.stream.fractions.clone(), group)
    }

    /// `floor(total * f)` for every fraction.
    pub fn sizes(&self, total: usize) -> BTreeMap<Fraction, usize> {
        self.fractions.iter().map(|&f| (f, f.floor_of(total))).collect()
    }
}

/// Nested prefixes of one shuffled ordering of the (filtered) pool.
#[derive(Clone, Debug)]
pub struct FractionSplit {
    order: Vec<usize>,
    sizes: BTreeMap<Fraction, usize>,
    warnings: Vec<String>,
}

impl FractionSplit {
    /// Pool indices in shuffled order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sizes(&self) -> &BTreeMap<Fraction, usize> {
        &self.sizes
    }

    /// Pool indices of the fraction's prefix, or `None` for an unscheduled fraction.
    pub fn indices(&self, fraction: Fraction) -> Option<&[usize]> {
        self.sizes.get(&fraction).map(|&n| &self.order[..n])
    }

    pub fn items(&self, pool: &RealDefectPool, fraction: Fraction) -> Option<Vec<RealDefect>> {
        self.indices(fraction).map(|idx| idx.iter().map(|&i| pool.items[i].clone()).collect())
    }

    /// Fractions whose prefix came out empty.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Filters the pool by group, shuffles once with the pool's seed and assigns
/// each fraction the first `floor(n * f)` items.
pub fn build_fractions(pool: &RealDefectPool, schedule: &FractionSchedule) -> Result<FractionSplit> {
    let groups: Vec<DefectGroup> = pool.items.iter().map(RealDefect::group).collect();
    split_groups(&groups, pool.shuffle_seed, schedule)
}

/// [`build_fractions`] over the group labels alone; indices refer to `groups`.
pub fn split_groups(groups: &[DefectGroup], shuffle_seed: u64, schedule: &FractionSchedule) -> Result<FractionSplit> {
    let mut order: Vec<usize> =
        groups.iter().enumerate().filter(|(_, &g)| schedule.group.admits(g)).map(|(i, _)| i).collect();
    if order.is_empty() {
        let filter = match schedule.group {
            GroupFilter::Mixed => String::new(),
            g => format!(" after filtering to {g:?}").to_lowercase(),
        };
        return Err(Error::EmptyPool(filter));
    }
    order.shuffle(&mut derive_rng(shuffle_seed, &[stage::SHUFFLE]));
    let sizes = schedule.sizes(order.len());
    let warnings = sizes
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(f, _)| format!("fraction {f} of {} real defects is empty", order.len()))
        .collect();
    Ok(FractionSplit { order, sizes, warnings })
}

/// Supplies fault-free patches.
pub trait FaultFreeSource: Sync {
    fn draw(&self, rng: &mut StreamRng) -> Result<Patch>;
}

/// Uniform draws, with replacement, from a fixed list of patches.
#[derive(Clone, Debug)]
pub struct PatchListSource {
    patches: Vec<Patch>,
}

impl PatchListSource {
    pub fn new(patches: Vec<Patch>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::InvalidInput("fault-free source has no patches".into()));
        }
        Ok(Self { patches })
    }
}

impl FaultFreeSource for PatchListSource {
    fn draw(&self, rng: &mut StreamRng) -> Result<Patch> {
        Ok(self.patches.choose(rng).expect("source is nonempty").clone())
    }
}

/// Turns a fault-free patch into a synthetic defect with an exact mask.
pub trait DefectSynthesizer: Sync {
    fn synthesize(&self, patch: &Patch, scope: &SeedScope) -> Result<(Patch, GroundTruthMask)>;
}

/// The random-walk synthesizer.
#[derive(Clone, Debug)]
pub struct WalkSynthesizer {
    pub ranges: SynthesisRanges,
}

impl DefectSynthesizer for WalkSynthesizer {
    fn synthesize(&self, patch: &Patch, scope: &SeedScope) -> Result<(Patch, GroundTruthMask)> {
        let s = synthesize(patch, &self.ranges, scope)?;
        Ok((s.patch, s.mask))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemSource {
    FaultFree,
    Synthetic,
    Real,
}

/// One labeled training sample. `mask` is `None` for real items, whose
/// pixel-level truth is unknown.
#[derive(Clone, Debug)]
pub struct StreamItem {
    pub index: u64,
    pub patch: Patch,
    pub mask: Option<GroundTruthMask>,
    pub label: ImageLabel,
    pub source: ItemSource,
}

#[derive(Clone, Debug)]
pub struct StreamSettings {
    pub p_inject: Fraction,
    pub r_syn: Fraction,
    /// Accept `p_inject >= 1/2`; such streams carry a warning.
    pub force: bool,
    pub crop: CropWindow,
    pub real_augment: AugmentationSpec,
}

impl StreamSettings {
    pub fn from_config(config: &PipelineConfig, modality: ModalityId) -> Result<Self> {
        Ok(Self {
            p_inject: config.stream.p_inject,
            r_syn: config.stream.r_syn,
            force: config.stream.force_p_inject,
            crop: config.geometry.crop,
            real_augment: config.modality_settings(modality)?.augment.clone(),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionSummary {
    pub total: usize,
    pub by_source: BTreeMap<String, usize>,
    pub by_group: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

impl CompositionSummary {
    fn empty(warnings: Vec<String>) -> Self {
        let by_source = ["fault_free", "synthetic", "real"].iter().map(|k| (k.to_string(), 0)).collect();
        let by_group = ["points", "area", "synthetic"].iter().map(|k| (k.to_string(), 0)).collect();
        Self { total: 0, by_source, by_group, warnings }
    }

    pub fn record(&mut self, source: ItemSource, label: ImageLabel) {
        self.total += 1;
        let key = match source {
            ItemSource::FaultFree => "fault_free",
            ItemSource::Synthetic => "synthetic",
            ItemSource::Real => "real",
        };
        *self.by_source.entry(key.into()).or_default() += 1;
        if let Some(group) = label.defect_group() {
            *self.by_group.entry(group.as_str().into()).or_default() += 1;
        }
    }

    pub fn source_count(&self, source: ItemSource) -> usize {
        let key = match source {
            ItemSource::FaultFree => "fault_free",
            ItemSource::Synthetic => "synthetic",
            ItemSource::Real => "real",
        };
        self.by_source.get(key).copied().unwrap_or(0)
    }

    pub fn group_count(&self, group: DefectGroup) -> usize {
        self.by_group.get(group.as_str()).copied().unwrap_or(0)
    }
}

/// A deterministic, index-addressed mixed stream.
pub struct MixedStream<F, S> {
    source: F,
    synthesizer: S,
    real: Vec<RealDefect>,
    settings: StreamSettings,
    scope: SeedScope,
    warnings: Vec<String>,
    cursor: u64,
}

impl<F: FaultFreeSource, S: DefectSynthesizer> MixedStream<F, S> {
    /// `real` is the active fraction. An empty fraction disables injection.
    pub fn new(
        source: F,
        synthesizer: S,
        real: Vec<RealDefect>,
        settings: StreamSettings,
        master_seed: u64,
    ) -> Result<Self> {
        if settings.p_inject > Fraction::ONE {
            return Err(Error::config("stream.p_inject", "must not exceed 1"));
        }
        if settings.r_syn > Fraction::ONE {
            return Err(Error::config("stream.r_syn", "must not exceed 1"));
        }
        let mut warnings = Vec::new();
        if settings.p_inject >= Fraction::HALF {
            if !settings.force {
                return Err(Error::config("stream.p_inject", "must be below 1/2 unless forced"));
            }
            warnings
                .push(format!("p_inject = {} is at least 1/2; real defects dominate the stream", settings.p_inject));
        }
        if real.is_empty() && settings.p_inject > Fraction::ZERO {
            warnings.push("active real-defect fraction is empty; injection disabled".into());
        }
        for (i, item) in real.iter().enumerate() {
            if (item.patch.width(), item.patch.height()) != (settings.crop.raw_size, settings.crop.raw_size) {
                return Err(Error::Dimension(format!(
                    "real defect {i} is {}x{}, expected {}x{}",
                    item.patch.width(),
                    item.patch.height(),
                    settings.crop.raw_size,
                    settings.crop.raw_size
                )));
            }
        }
        Ok(Self {
            source,
            synthesizer,
            real,
            settings,
            scope: SeedScope::new(master_seed, vec![stage::STREAM]),
            warnings,
            cursor: 0,
        })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Item `index` of the stream; independent of any other index.
    pub fn item(&self, index: u64) -> Result<StreamItem> {
        let scope = self.scope.child(index);
        let mut decisions = scope.child(DRAW_DECISIONS).rng();
        let make_synthetic = bernoulli(&mut decisions, self.settings.r_syn);
        let inject = bernoulli(&mut decisions, self.settings.p_inject) && !self.real.is_empty();

        if inject {
            let mut rng = scope.child(DRAW_REAL).rng();
            let chosen = self.real.choose(&mut rng).expect("checked nonempty");
            let cropped = crop_defect_window(&chosen.patch, &self.settings.crop, &mut rng)?;
            let augmented = augment(&cropped, &self.settings.real_augment, &mut rng)?;
            return Ok(StreamItem {
                index,
                patch: augmented.patch.with_seed_path(scope.path().to_vec()),
                mask: None,
                label: chosen.label,
                source: ItemSource::Real,
            });
        }

        let patch = self.source.draw(&mut scope.child(DRAW_SOURCE).rng())?;
        if make_synthetic {
            let (patch, mask) = self.synthesizer.synthesize(&patch, &scope.child(DRAW_SYNTH))?;
            if mask.is_empty() {
                return Err(Error::SynthesisFailed {
                    attempts: 1,
                    reason: "synthesizer returned an empty mask".into(),
                });
            }
            return Ok(StreamItem {
                index,
                patch: patch.with_seed_path(scope.path().to_vec()),
                mask: Some(mask),
                label: ImageLabel::Defective(DefectGroup::Synthetic),
                source: ItemSource::Synthetic,
            });
        }
        let mask = GroundTruthMask::empty(patch.width(), patch.height());
        Ok(StreamItem {
            index,
            patch: patch.with_seed_path(scope.path().to_vec()),
            mask: Some(mask),
            label: ImageLabel::Good,
            source: ItemSource::FaultFree,
        })
    }

    /// The item at the cursor; advances the cursor.
    pub fn next_item(&mut self) -> Result<StreamItem> {
        let item = self.item(self.cursor)?;
        self.cursor += 1;
        Ok(item)
    }

    /// Items `0..n`, produced in parallel, with their composition.
    pub fn emit_epoch(&self, n: usize) -> Result<(Vec<StreamItem>, CompositionSummary)> {
        let items: Vec<StreamItem> = (0..n as u64).into_par_iter().map(|i| self.item(i)).collect::<Result<_>>()?;
        let mut summary = CompositionSummary::empty(self.warnings.clone());
        for item in &items {
            summary.record(item.source, item.label);
        }
        Ok((items, summary))
    }

    /// Streams items `0..n` to `sink` in index order without holding the
    /// epoch in memory. Items are produced in parallel batches.
    pub fn for_each_item(
        &self,
        n: usize,
        mut sink: impl FnMut(StreamItem) -> Result<()>,
    ) -> Result<CompositionSummary> {
        const BATCH: u64 = 256;
        let mut summary = CompositionSummary::empty(self.warnings.clone());
        let n = n as u64;
        let mut start = 0;
        while start < n {
            let end = (start + BATCH).min(n);
            let batch: Vec<StreamItem> = (start..end).into_par_iter().map(|i| self.item(i)).collect::<Result<_>>()?;
            for item in batch {
                summary.record(item.source, item.label);
                sink(item)?;
            }
            start = end;
        }
        Ok(summary)
    }
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: Fraction) -> bool {
    // random_ratio needs numerator <= denominator and a nonzero denominator
    rng.random_ratio(p.numer().min(p.denom()), p.denom())
}
