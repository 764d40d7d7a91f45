use image::{imageops, GrayImage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModalityId, Origin, Patch, Rect};
use crate::rng::SeedScope;

fn check_roi(image: (u32, u32), roi: &Rect, patch: u32) -> Result<()> {
    if !Rect::new(0, 0, image.0, image.1).contains_rect(roi) {
        return Err(Error::InvalidInput(format!("region of interest {roi} exceeds the {}x{} image", image.0, image.1)));
    }
    if roi.width < patch || roi.height < patch {
        return Err(Error::RoiTooSmall { roi: roi.to_string(), patch });
    }
    Ok(())
}

/// Window starts along one axis: `0, stride, 2 stride, ...` while the window
/// fits, plus one window flush with the far edge if the grid misses it.
pub fn grid_offsets(extent: u32, patch: u32, stride: u32) -> Result<Vec<u32>> {
    if stride == 0 || stride > patch {
        return Err(Error::config("stride", format!("must lie in 1..={patch}, got {stride}")));
    }
    if extent < patch {
        return Err(Error::RoiTooSmall { roi: format!("extent {extent}"), patch });
    }
    let last = extent - patch;
    let mut offsets: Vec<u32> = (0..=last).step_by(stride as usize).collect();
    if offsets.last() != Some(&last) {
        offsets.push(last);
    }
    Ok(offsets)
}

/// Absolute top-left corners of the sliding-window grid over `roi`, row-major.
pub fn grid_positions(roi: &Rect, patch: u32, stride: u32) -> Result<Vec<(u32, u32)>> {
    if roi.width < patch || roi.height < patch {
        return Err(Error::RoiTooSmall { roi: roi.to_string(), patch });
    }
    let xs = grid_offsets(roi.width, patch, stride)?;
    let ys = grid_offsets(roi.height, patch, stride)?;
    Ok(ys.iter().flat_map(|&y| xs.iter().map(move |&x| (roi.x + x, roi.y + y))).collect())
}

fn cut(image: &GrayImage, x: u32, y: u32, size: u32, modality: ModalityId, source: &str) -> Result<Patch> {
    let tile = imageops::crop_imm(image, x, y, size, size).to_image();
    Patch::new(tile, modality, Origin::new(source, x, y))
}

/// Overlapping sliding-window patches covering `roi` completely.
pub fn extract_grid_patches(
    image: &GrayImage,
    source: &str,
    roi: &Rect,
    patch: u32,
    stride: u32,
    modality: ModalityId,
) -> Result<Vec<Patch>> {
    check_roi(image.dimensions(), roi, patch)?;
    grid_positions(roi, patch, stride)?.into_iter().map(|(x, y)| cut(image, x, y, patch, modality, source)).collect()
}

/// `n` top-left corners drawn uniformly over the positions that keep the
/// patch inside `roi`. Corner `i` is drawn from `scope.child(i)`.
pub fn random_offsets(roi: &Rect, patch: u32, n: usize, scope: &SeedScope) -> Result<Vec<(u32, u32)>> {
    if roi.width < patch || roi.height < patch {
        return Err(Error::RoiTooSmall { roi: roi.to_string(), patch });
    }
    let max_dx = roi.width - patch;
    let max_dy = roi.height - patch;
    Ok((0..n)
        .map(|i| {
            let mut rng = scope.child(i as u64).rng();
            let dx = rng.random_range(0..=max_dx);
            let dy = rng.random_range(0..=max_dy);
            (roi.x + dx, roi.y + dy)
        })
        .collect())
}

pub fn extract_random_patches(
    image: &GrayImage,
    source: &str,
    roi: &Rect,
    patch: u32,
    n: usize,
    modality: ModalityId,
    scope: &SeedScope,
) -> Result<Vec<Patch>> {
    check_roi(image.dimensions(), roi, patch)?;
    random_offsets(roi, patch, n, scope)?
        .into_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            Ok(cut(image, x, y, patch, modality, source)?.with_seed_path(scope.child(i as u64).path().to_vec()))
        })
        .collect()
}

/// Geometry for cutting training patches out of centrally labeled raw defect crops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropWindow {
    pub raw_size: u32,
    pub out_size: u32,
    pub offset_min: u32,
    pub offset_max: u32,
}

impl Default for CropWindow {
    /// 512 -> 256 with offsets in `[64, 192]`, so the crop always holds the
    /// central 128x128 neighborhood.
    fn default() -> Self {
        Self { raw_size: 512, out_size: 256, offset_min: 64, offset_max: 192 }
    }
}

impl CropWindow {
    pub fn validate(&self) -> Result<()> {
        if self.offset_min > self.offset_max {
            return Err(Error::config("geometry.crop_offset", "min must not exceed max"));
        }
        if self.offset_max + self.out_size > self.raw_size {
            return Err(Error::config("geometry.crop_offset", "crop would leave the raw patch"));
        }
        Ok(())
    }
}

pub fn crop_offset<R: Rng + ?Sized>(window: &CropWindow, rng: &mut R) -> (u32, u32) {
    let x = rng.random_range(window.offset_min..=window.offset_max);
    let y = rng.random_range(window.offset_min..=window.offset_max);
    (x, y)
}

/// Cuts an `out_size` patch at a uniformly drawn offset inside the band.
pub fn crop_defect_window<R: Rng + ?Sized>(raw: &Patch, window: &CropWindow, rng: &mut R) -> Result<Patch> {
    if raw.width() != window.raw_size || raw.height() != window.raw_size {
        return Err(Error::Dimension(format!(
            "raw defect patch is {}x{}, expected {}x{}",
            raw.width(),
            raw.height(),
            window.raw_size,
            window.raw_size
        )));
    }
    let (x, y) = crop_offset(window, rng);
    let tile = imageops::crop_imm(raw.pixels(), x, y, window.out_size, window.out_size).to_image();
    let origin = Origin::new(raw.origin().source.clone(), raw.origin().x + x, raw.origin().y + y);
    Ok(Patch::new(tile, raw.modality(), origin)?.with_seed_path(raw.seed_path().to_vec()))
}
