use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModalityId, Patch};
use crate::pipeline::sampling::{reflect_index, to_u8};

/// Training-time preprocessing: brightness scaling, then gaussian smoothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSpec {
    pub brightness_factor: f64,
    pub kernel_size: u32,
    pub sigma: f64,
}

impl PreprocessSpec {
    pub fn default_for(modality: ModalityId) -> Self {
        let brightness_factor = match modality {
            ModalityId::Lsm1 => 1.5,
            ModalityId::Lsm2 | ModalityId::Asm => 1.0,
        };
        Self { brightness_factor, kernel_size: 3, sigma: 1.0 }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.brightness_factor > 0.0 && self.brightness_factor.is_finite()) {
            return Err(Error::config(format!("{prefix}.brightness_factor"), "must be positive"));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::config(format!("{prefix}.kernel_size"), "must be odd"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config(format!("{prefix}.sigma"), "must be positive"));
        }
        Ok(())
    }
}

/// Normalized 1-D gaussian weights.
pub fn gaussian_kernel(size: u32, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as i64;
    let raw: Vec<f64> = (-half..=half).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Scales by the brightness factor (rounded, clamped to 8 bits), then
/// convolves with the 2-D gaussian using mirror padding.
///
/// The convolution sums the full 2-D outer-product kernel in `f64` in raster
/// order and rounds half away from zero.
pub fn preprocess(patch: &Patch, spec: &PreprocessSpec) -> Result<Patch> {
    spec.validate("preprocess")?;
    let src = patch.pixels();
    let scaled = if spec.brightness_factor == 1.0 {
        src.clone()
    } else {
        GrayImage::from_fn(src.width(), src.height(), |x, y| {
            image::Luma([to_u8(src.get_pixel(x, y).0[0] as f64 * spec.brightness_factor)])
        })
    };
    patch.with_pixels(smooth(&scaled, spec.kernel_size, spec.sigma))
}

fn smooth(image: &GrayImage, size: u32, sigma: f64) -> GrayImage {
    let k = gaussian_kernel(size, sigma);
    let half = (size / 2) as i64;
    let (w, h) = image.dimensions();
    GrayImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (j, wy) in k.iter().enumerate() {
            let sy = reflect_index(y as i64 + j as i64 - half, h);
            for (i, wx) in k.iter().enumerate() {
                let sx = reflect_index(x as i64 + i as i64 - half, w);
                acc += wy * wx * image.get_pixel(sx, sy).0[0] as f64;
            }
        }
        image::Luma([to_u8(acc)])
    })
}
