use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::metrics::check_scores;
use crate::metrics::evaluate::ScoreMap;
use crate::model::BinaryMask;

/// Area under the ROC curve by the trapezoidal rule over all distinct
/// thresholds. A tied positive/negative pair contributes one half.
pub fn auroc(scores: &[(f64, bool)]) -> Result<f64> {
    check_scores(scores)?;
    let mut items = scores.to_vec();
    auroc_sorted(&mut items, |a, b| b.total_cmp(a))
}

/// AUROC over every pixel of every map, pooled into one population.
pub fn pixel_auroc(maps: &[ScoreMap], masks: &[BinaryMask]) -> Result<f64> {
    if maps.len() != masks.len() {
        return Err(Error::Dimension(format!("{} maps for {} masks", maps.len(), masks.len())));
    }
    let total: usize = maps.iter().map(|m| m.values().len()).sum();
    let mut pixels: Vec<(f32, bool)> = Vec::with_capacity(total);
    for (i, (map, mask)) in maps.iter().zip(masks).enumerate() {
        if map.dimensions() != mask.dimensions() {
            return Err(Error::Dimension(format!(
                "map {i} is {:?}, its mask is {:?}",
                map.dimensions(),
                mask.dimensions()
            )));
        }
        if map.values().iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!("map {i} contains NaN")));
        }
        pixels.extend(map.values().iter().copied().zip(mask.as_slice().iter().copied()));
    }
    auroc_sorted(&mut pixels, |a, b| b.total_cmp(a))
}

/// Sorts by descending score and integrates tie group by tie group.
///
/// Twice the area is accumulated exactly in integers:
/// `sum over groups of fp_g * (2 * tp_before + tp_g)`.
fn auroc_sorted<T: Copy + PartialEq>(items: &mut [(T, bool)], descending: impl Fn(&T, &T) -> Ordering) -> Result<f64> {
    let positives = items.iter().filter(|(_, p)| *p).count() as u128;
    let negatives = items.len() as u128 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined("AUROC needs at least one positive and one negative".into()));
    }
    items.sort_unstable_by(|a, b| descending(&a.0, &b.0));
    let mut twice_area: u128 = 0;
    let mut tp_before: u128 = 0;
    let mut i = 0;
    while i < items.len() {
        let key = items[i].0;
        let (mut tp_g, mut fp_g) = (0u128, 0u128);
        while i < items.len() && items[i].0 == key {
            if items[i].1 {
                tp_g += 1;
            } else {
                fp_g += 1;
            }
            i += 1;
        }
        twice_area += fp_g * (2 * tp_before + tp_g);
        tp_before += tp_g;
    }
    Ok(twice_area as f64 / (2 * positives * negatives) as f64)
}
