//! Deterministic fixtures shared by the benchmarks.

use defectkit_core::{BinaryMask, ModalityId, Origin, Patch};
use image::{GrayImage, Luma};

/// Mid-gray texture, far enough from 0 and 255 that blends do not saturate.
pub fn texture(width: u32, height: u32, seed: u32) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| {
        let h = (x.wrapping_mul(73_856_093) ^ y.wrapping_mul(19_349_663) ^ seed.wrapping_mul(83_492_791)) % 48;
        Luma([(104 + h) as u8])
    })
}

pub fn patch(size: u32, modality: ModalityId, seed: u32) -> Patch {
    Patch::new(texture(size, size, seed), modality, Origin::new(format!("bench{seed}"), 0, 0)).expect("valid patch")
}

/// `n` scored labels with roughly 5% positives and plenty of ties.
pub fn scored_labels(n: usize) -> Vec<(f64, bool)> {
    (0..n)
        .map(|i| {
            let h = (i as u64).wrapping_mul(2_654_435_761) % 1_000_003;
            let positive = h.is_multiple_of(20);
            let score = (h % 997) as f64 / 997.0 + if positive { 0.4 } else { 0.0 };
            (score, positive)
        })
        .collect()
}

/// A blobby mask: a few disks plus scattered single pixels.
pub fn blob_mask(size: u32) -> BinaryMask {
    let centers = [(40.0, 40.0, 12.0), (128.0, 90.0, 30.0), (200.0, 200.0, 20.0), (60.0, 190.0, 8.0)];
    BinaryMask::from_fn(size, size, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        centers.iter().any(|&(cx, cy, r)| (fx - cx).powi(2) + (fy - cy).powi(2) <= r * r)
            || (x * 31 + y * 17) % 211 == 0
    })
}
