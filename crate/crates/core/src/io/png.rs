use std::fs;
use std::path::Path;

use image::{ColorType, GrayImage};

use crate::error::{Error, Result};
use crate::model::{luminance, BinaryMask};

fn open(path: &Path) -> Result<image::DynamicImage> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

/// Reads an 8-bit gray or rgb PNG as single-channel; rgb goes through luminance.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let img = open(path)?;
    match img.color() {
        ColorType::L8 => Ok(img.into_luma8()),
        ColorType::Rgb8 => Ok(luminance(&img.into_rgb8())),
        other => Err(Error::InvalidInput(format!("{}: expected 8-bit gray or rgb, found {other:?}", path.display()))),
    }
}

/// Reads a single-channel 8-bit mask; nonzero pixels are defective.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let img = open(path)?;
    if img.color() != ColorType::L8 {
        return Err(Error::InvalidInput(format!(
            "{}: masks must be 8-bit single-channel, found {:?}",
            path.display(),
            img.color()
        )));
    }
    Ok(BinaryMask::from_gray(&img.into_luma8()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_gray(path: &Path, image: &GrayImage) -> Result<()> {
    ensure_parent(path)?;
    image.save(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

/// Writes a mask as 0 / 255.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_gray(path, &mask.to_gray())
}
