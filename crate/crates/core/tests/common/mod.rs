//! Brute-force oracles and fixtures shared by the integration tests. Nothing
//! here calls into the metric or extraction code it is used to check.

#![allow(dead_code)]

use defectkit_core::model::{BinaryMask, ModalityId, Origin, Patch};
use defectkit_core::rng::SeedScope;
use defectkit_core::stream::DefectSynthesizer;
use defectkit_core::synth::DefectTexture;
use defectkit_core::{GroundTruthMask, Result};
use image::GrayImage;
use rand::Rng;

/// Per-sample tally of `(score, positive)` at `score >= t`: (tn, tp, fn, fp).
pub fn tally(samples: &[(f64, bool)], t: f64) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for &(s, p) in samples {
        let flagged = s >= t;
        if p && flagged {
            c.1 += 1;
        } else if p {
            c.2 += 1;
        } else if flagged {
            c.3 += 1;
        } else {
            c.0 += 1;
        }
    }
    c
}

/// MCC written out from its definition, 0 on an empty marginal.
pub fn mcc_oracle(tn: u64, tp: u64, fn_: u64, fp: u64) -> f64 {
    let (tn, tp, fn_, fp) = (tn as f64, tp as f64, fn_ as f64, fp as f64);
    let d = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if d == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / d.sqrt()
    }
}

/// Pairwise Mann-Whitney statistic over every positive/negative pair.
pub fn mann_whitney(samples: &[(f64, bool)]) -> Option<f64> {
    let pos: Vec<f64> = samples.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = samples.iter().filter(|s| !s.1).map(|s| s.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

pub fn f1_from(tp: u64, fp: u64, fn_: u64) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Largest F1 over every threshold that changes the decision set, and the
/// smallest false-positive count achieving it.
pub fn exhaustive_best_f1(samples: &[(f64, bool)]) -> (f64, u64) {
    let mut candidates: Vec<f64> = samples.iter().map(|s| s.0).collect();
    candidates.push(f64::NEG_INFINITY);
    candidates.push(f64::INFINITY);
    let mut best = (-1.0, u64::MAX);
    for t in candidates {
        let (_, tp, fn_, fp) = tally(samples, t);
        let f1 = f1_from(tp, fp, fn_);
        if f1 > best.0 + 1e-15 || ((f1 - best.0).abs() <= 1e-15 && fp < best.1) {
            best = (f1, fp);
        }
    }
    best
}

/// 8-connected regions by explicit-stack flood fill, each as a sorted pixel
/// list; regions ordered by their smallest (row, column).
pub fn flood_fill_regions(mask: &BinaryMask) -> Vec<Vec<(u32, u32)>> {
    let (w, h) = mask.dimensions();
    let mut seen = vec![false; (w * h) as usize];
    let mut regions = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || seen[(y * w + x) as usize] {
                continue;
            }
            let mut region = Vec::new();
            let mut stack = vec![(x, y)];
            seen[(y * w + x) as usize] = true;
            while let Some((cx, cy)) = stack.pop() {
                region.push((cx, cy));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as u32, ny as u32);
                        let k = (ny * w + nx) as usize;
                        if mask.get(nx, ny) && !seen[k] {
                            seen[k] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            region.sort_by_key(|&(x, y)| (y, x));
            regions.push(region);
        }
    }
    regions
}

/// Mean over regions of the covered share, tallied pixel by pixel.
pub fn pro_oracle(preds: &[BinaryMask], masks: &[BinaryMask]) -> Option<f64> {
    let mut shares = Vec::new();
    for (pred, mask) in preds.iter().zip(masks) {
        for region in flood_fill_regions(mask) {
            let mut hit = 0usize;
            for &(x, y) in &region {
                if pred.get(x, y) {
                    hit += 1;
                }
            }
            shares.push(hit as f64 / region.len() as f64);
        }
    }
    if shares.is_empty() {
        None
    } else {
        Some(shares.iter().sum::<f64>() / shares.len() as f64)
    }
}

/// Window starts along one axis by walking the stride, plus a flush final window.
pub fn enumerate_offsets(extent: u32, patch: u32, stride: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut x = 0;
    while x + patch <= extent {
        out.push(x);
        x += stride;
    }
    if let Some(&last) = out.last() {
        if last + patch < extent {
            out.push(extent - patch);
        }
    }
    out
}

/// Scores with frequent ties: about half the instances use a coarse grid.
pub fn random_scores<R: Rng>(rng: &mut R, n: usize) -> Vec<(f64, bool)> {
    let coarse = rng.random_bool(0.5);
    let p = rng.random_range(0.05..0.95);
    (0..n)
        .map(|_| {
            let s = if coarse { rng.random_range(0..8) as f64 / 4.0 } else { rng.random_range(-3.0..3.0) };
            (s, rng.random_bool(p))
        })
        .collect()
}

pub fn random_mask<R: Rng>(rng: &mut R, w: u32, h: u32) -> BinaryMask {
    let density = rng.random_range(0.05..0.6);
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density))
}

/// Pixel-diff mask: changed by at least one level and inside the texture support.
pub fn pixel_diff_mask(before: &GrayImage, after: &GrayImage, texture: &DefectTexture) -> BinaryMask {
    let tau = texture.params().mask_threshold;
    BinaryMask::from_fn(before.width(), before.height(), |x, y| {
        let a = before.get_pixel(x, y).0[0] as i32;
        let b = after.get_pixel(x, y).0[0] as i32;
        let support = (texture.delta_at(x, y) as f64).abs() >= tau;
        (a - b).abs() >= 1 && support
    })
}

/// A textured 256x256 patch from a seed.
pub fn textured_patch(modality: ModalityId, seed: u64) -> Patch {
    let mut rng = defectkit_core::derive_rng(seed, &[9_000]);
    let base: u8 = rng.random_range(60..190);
    let img = GrayImage::from_fn(256, 256, |_, _| image::Luma([base.saturating_add(rng.random_range(0..12))]));
    Patch::new(img, modality, Origin::new(format!("fixture-{seed}"), 0, 0)).unwrap()
}

/// Stamps a fixed 8x8 bright block; stands in for the walk when only the
/// stream bookkeeping is under test.
pub struct BlockSynthesizer;

impl DefectSynthesizer for BlockSynthesizer {
    fn synthesize(&self, patch: &Patch, _scope: &SeedScope) -> Result<(Patch, GroundTruthMask)> {
        let inside = |x: u32, y: u32| (124..132).contains(&x) && (124..132).contains(&y);
        let mut px = patch.pixels().clone();
        for (x, y, p) in px.enumerate_pixels_mut() {
            if inside(x, y) {
                p.0[0] = 255;
            }
        }
        let mask = BinaryMask::from_fn(256, 256, |x, y| inside(x, y) && patch.pixels().get_pixel(x, y).0[0] != 255);
        Ok((patch.with_pixels(px)?, mask))
    }
}
