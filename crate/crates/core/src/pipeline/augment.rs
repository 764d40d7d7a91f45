use image::GrayImage;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{BinaryMask, GroundTruthMask, ModalityId, Patch};
use crate::pipeline::sampling::{bilinear, reflect_coord, to_u8};

/// Redraws allowed when a transform pushes every mask pixel out of frame.
const MAX_REDRAWS: u32 = 8;

/// Random affine and illumination settings for one modality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSpec {
    /// Rotation is drawn from `[-rotation_deg, rotation_deg]`.
    pub rotation_deg: f64,
    pub scale: [f64; 2],
    /// Horizontal shear angle drawn from `[-shear_deg, shear_deg]`.
    pub shear_deg: f64,
    pub v_flip: bool,
    pub h_flip: bool,
    /// Multiplicative range; an empty array in the config disables it.
    #[serde(with = "optional_range", default)]
    pub brightness: Option<[f64; 2]>,
    #[serde(with = "optional_range", default)]
    pub contrast: Option<[f64; 2]>,
    /// Probability that a patch is transformed at all.
    pub apply_prob: f64,
}

pub const APPLY_PROB_BAND: (f64, f64) = (0.80, 0.95);

impl AugmentationSpec {
    pub fn default_for(modality: ModalityId) -> Self {
        let illumination = Some([0.75, 1.25]);
        match modality {
            ModalityId::Lsm1 => Self {
                rotation_deg: 45.0,
                scale: [0.9, 1.1],
                shear_deg: 10.0,
                v_flip: true,
                h_flip: true,
                brightness: illumination,
                contrast: illumination,
                apply_prob: 0.9,
            },
            ModalityId::Lsm2 => Self { shear_deg: 20.0, ..Self::default_for(ModalityId::Lsm1) },
            ModalityId::Asm => Self {
                rotation_deg: 10.0,
                scale: [1.0, 1.2],
                shear_deg: 10.0,
                v_flip: true,
                h_flip: true,
                brightness: None,
                contrast: None,
                apply_prob: 0.9,
            },
        }
    }

    /// A spec that never changes anything.
    pub fn identity() -> Self {
        Self {
            rotation_deg: 0.0,
            scale: [1.0, 1.0],
            shear_deg: 0.0,
            v_flip: false,
            h_flip: false,
            brightness: None,
            contrast: None,
            apply_prob: 0.0,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |name: &str| format!("{prefix}.{name}");
        if !(self.rotation_deg >= 0.0 && self.rotation_deg <= 180.0) {
            return Err(Error::config(field("rotation_deg"), "must lie in [0, 180]"));
        }
        if !(self.shear_deg >= 0.0 && self.shear_deg < 90.0) {
            return Err(Error::config(field("shear_deg"), "must lie in [0, 90)"));
        }
        let positive_range = |r: [f64; 2]| r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
        if !positive_range(self.scale) {
            return Err(Error::config(field("scale"), "must satisfy 0 < min <= max"));
        }
        if self.brightness.is_some_and(|r| !positive_range(r)) {
            return Err(Error::config(field("brightness"), "must satisfy 0 < min <= max"));
        }
        if self.contrast.is_some_and(|r| !positive_range(r)) {
            return Err(Error::config(field("contrast"), "must satisfy 0 < min <= max"));
        }
        if !(APPLY_PROB_BAND.0..=APPLY_PROB_BAND.1).contains(&self.apply_prob) {
            return Err(Error::config(
                field("apply_prob"),
                format!("must lie in [{}, {}]", APPLY_PROB_BAND.0, APPLY_PROB_BAND.1),
            ));
        }
        Ok(())
    }
}

mod optional_range {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<[f64; 2]>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match value {
            Some(r) => r.serialize(s),
            None => Vec::<f64>::new().serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<[f64; 2]>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        match v[..] {
            [] => Ok(None),
            [lo, hi] => Ok(Some([lo, hi])),
            _ => Err(serde::de::Error::custom("expected [] or [min, max]")),
        }
    }
}

/// The concrete transform drawn for one patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineDraw {
    pub rotation_deg: f64,
    pub scale: f64,
    pub shear_deg: f64,
    pub v_flip: bool,
    pub h_flip: bool,
    pub brightness: Option<f64>,
    pub contrast: Option<f64>,
}

impl AffineDraw {
    fn is_identity_geometry(&self) -> bool {
        self.rotation_deg == 0.0 && self.scale == 1.0 && self.shear_deg == 0.0 && !self.v_flip && !self.h_flip
    }

    /// Inverse of `R(rotation) * Shear * Scale * Flip`, mapping output offsets
    /// from the patch center back to input offsets.
    fn inverse_matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let t = self.shear_deg.to_radians().tan();
        let fx = if self.h_flip { -1.0 } else { 1.0 };
        let fy = if self.v_flip { -1.0 } else { 1.0 };
        let k = self.scale;
        // R * Sh
        let rs = [[c, c * t - s], [s, s * t + c]];
        // (R * Sh) * (k F)
        let m = [[rs[0][0] * k * fx, rs[0][1] * k * fy], [rs[1][0] * k * fx, rs[1][1] * k * fy]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
    }
}

fn draw<R: Rng + ?Sized>(spec: &AugmentationSpec, rng: &mut R) -> AffineDraw {
    let symmetric = |rng: &mut R, half: f64| if half == 0.0 { 0.0 } else { rng.random_range(-half..=half) };
    let range = |rng: &mut R, r: [f64; 2]| if r[0] == r[1] { r[0] } else { rng.random_range(r[0]..=r[1]) };
    let rotation_deg = symmetric(rng, spec.rotation_deg);
    let scale = range(rng, spec.scale);
    let shear_deg = symmetric(rng, spec.shear_deg);
    let v_flip = spec.v_flip && rng.random_bool(0.5);
    let h_flip = spec.h_flip && rng.random_bool(0.5);
    let brightness = spec.brightness.map(|r| range(rng, r));
    let contrast = spec.contrast.map(|r| range(rng, r));
    AffineDraw { rotation_deg, scale, shear_deg, v_flip, h_flip, brightness, contrast }
}

/// Result of [`augment_pair`]. `applied` is false when the patch was passed
/// through untouched.
#[derive(Clone, Debug)]
pub struct Augmented {
    pub patch: Patch,
    pub mask: Option<GroundTruthMask>,
    pub applied: bool,
    pub draw: Option<AffineDraw>,
}

pub fn augment<R: Rng + ?Sized>(patch: &Patch, spec: &AugmentationSpec, rng: &mut R) -> Result<Augmented> {
    augment_pair(patch, None, spec, rng)
}

/// With probability `apply_prob`, applies one random affine transform about
/// the patch center (bilinear, mirror padding) followed by the optional
/// brightness and contrast multipliers. A mask, when given, follows the same
/// geometry with nearest-neighbor sampling. Transforms that would empty a
/// nonempty mask are redrawn; after repeated failures the pair is returned
/// unchanged.
pub fn augment_pair<R: Rng + ?Sized>(
    patch: &Patch,
    mask: Option<&GroundTruthMask>,
    spec: &AugmentationSpec,
    rng: &mut R,
) -> Result<Augmented> {
    if let Some(m) = mask {
        if m.dimensions() != patch.pixels().dimensions() {
            return Err(Error::Dimension(format!(
                "mask is {:?}, patch is {:?}",
                m.dimensions(),
                patch.pixels().dimensions()
            )));
        }
    }
    let unchanged = || Augmented { patch: patch.clone(), mask: mask.cloned(), applied: false, draw: None };
    if !rng.random_bool(spec.apply_prob.clamp(0.0, 1.0)) {
        return Ok(unchanged());
    }
    for _ in 0..MAX_REDRAWS {
        let draw = draw(spec, rng);
        let out_mask = mask.map(|m| warp_mask(m, &draw));
        if let (Some(before), Some(after)) = (mask, &out_mask) {
            if !before.is_empty() && after.is_empty() {
                continue;
            }
        }
        let pixels = render(patch.pixels(), &draw);
        return Ok(Augmented { patch: patch.with_pixels(pixels)?, mask: out_mask, applied: true, draw: Some(draw) });
    }
    Ok(unchanged())
}

fn render(src: &GrayImage, draw: &AffineDraw) -> GrayImage {
    if draw.is_identity_geometry() && draw.brightness.is_none() && draw.contrast.is_none() {
        return src.clone();
    }
    let (w, h) = src.dimensions();
    let mut values: Vec<f64> = if draw.is_identity_geometry() {
        src.pixels().map(|p| p.0[0] as f64).collect()
    } else {
        let inv = draw.inverse_matrix();
        let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
        let mut out = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                let (u, v) = (x as f64 - cx, y as f64 - cy);
                let sx = inv[0][0] * u + inv[0][1] * v + cx;
                let sy = inv[1][0] * u + inv[1][1] * v + cy;
                out.push(bilinear(src, sx, sy));
            }
        }
        out
    };
    if let Some(b) = draw.brightness {
        values.iter_mut().for_each(|v| *v *= b);
    }
    if let Some(c) = draw.contrast {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v = mean + (*v - mean) * c);
    }
    GrayImage::from_vec(w, h, values.into_iter().map(to_u8).collect()).expect("buffer sized to image")
}

fn warp_mask(mask: &BinaryMask, draw: &AffineDraw) -> BinaryMask {
    if draw.is_identity_geometry() {
        return mask.clone();
    }
    let (w, h) = mask.dimensions();
    let inv = draw.inverse_matrix();
    let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
    BinaryMask::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 - cx, y as f64 - cy);
        let sx = reflect_coord(inv[0][0] * u + inv[0][1] * v + cx, w).round() as u32;
        let sy = reflect_coord(inv[1][0] * u + inv[1][1] * v + cy, h).round() as u32;
        mask.get(sx.min(w - 1), sy.min(h - 1))
    })
}
