//! Domain types shared across the pipeline.

use std::fmt;
use std::str::FromStr;

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PreprocessSpec;
use crate::synth::SynthesisParams;

/// Side lengths a [`Patch`] may have: training/test tiles and raw real-defect crops.
pub const PATCH_SIZES: [u32; 2] = [256, 512];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModalityId {
    Lsm1,
    Lsm2,
    Asm,
}

impl ModalityId {
    pub const ALL: [ModalityId; 3] = [ModalityId::Lsm1, ModalityId::Lsm2, ModalityId::Asm];

    pub fn key(self) -> &'static str {
        match self {
            ModalityId::Lsm1 => "lsm1",
            ModalityId::Lsm2 => "lsm2",
            ModalityId::Asm => "asm",
        }
    }
}

impl fmt::Display for ModalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModalityId::Lsm1 => "LSM-1",
            ModalityId::Lsm2 => "LSM-2",
            ModalityId::Asm => "ASM",
        })
    }
}

impl FromStr for ModalityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "lsm1" => Ok(ModalityId::Lsm1),
            "lsm2" => Ok(ModalityId::Lsm2),
            "asm" => Ok(ModalityId::Asm),
            _ => Err(Error::InvalidInput(format!("unknown modality `{s}` (expected lsm1, lsm2 or asm)"))),
        }
    }
}

/// An acquisition setup: on-disk channel count plus the preprocessing it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Modality {
    pub id: ModalityId,
    pub channels: u8,
    pub preprocessing: PreprocessSpec,
}

impl Modality {
    pub fn new(id: ModalityId, channels: u8, preprocessing: PreprocessSpec) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::config(format!("modality.{}.channels", id.key()), "must be 1 or 3"));
        }
        Ok(Self { id, channels, preprocessing })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectGroup {
    Points,
    Area,
    Synthetic,
}

impl DefectGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            DefectGroup::Points => "points",
            DefectGroup::Area => "area",
            DefectGroup::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for DefectGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DefectGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "points" => Ok(DefectGroup::Points),
            "area" => Ok(DefectGroup::Area),
            "synthetic" => Ok(DefectGroup::Synthetic),
            _ => Err(Error::InvalidInput(format!("unknown defect group `{s}`"))),
        }
    }
}

/// Image-level label. A defect group exists exactly when the image is defective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageLabel {
    Good,
    Defective(DefectGroup),
}

impl ImageLabel {
    pub fn is_defective(self) -> bool {
        matches!(self, ImageLabel::Defective(_))
    }

    pub fn defect_group(self) -> Option<DefectGroup> {
        match self {
            ImageLabel::Good => None,
            ImageLabel::Defective(group) => Some(group),
        }
    }
}

/// Where a patch was cut from: source image id and top-left offset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub source: String,
    pub x: u32,
    pub y: u32,
}

impl Origin {
    pub fn new(source: impl Into<String>, x: u32, y: u32) -> Self {
        Self { source: source.into(), x, y }
    }
}

/// Axis-aligned pixel rectangle, `x`/`y` inclusive, `width`/`height` in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self { x, y, width, height }
    }

    pub fn right(&self) -> u32 {
        self.x + self.width
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.height
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}+{}+{}", self.width, self.height, self.x, self.y)
    }
}

impl FromStr for Rect {
    type Err = Error;

    /// Parses `x,y,width,height`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u32> = s
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("rectangle `{s}` is not x,y,width,height")))?;
        match parts[..] {
            [x, y, width, height] => Ok(Rect::new(x, y, width, height)),
            _ => Err(Error::InvalidInput(format!("rectangle `{s}` is not x,y,width,height"))),
        }
    }
}

/// A single-channel 8-bit tile with provenance.
///
/// Three-channel inputs are reduced to luminance on construction via
/// [`Patch::from_rgb`], so every patch inside the pipeline is single-channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pixels: GrayImage,
    modality: ModalityId,
    origin: Origin,
    seed_path: Vec<u64>,
    synthesis: Option<SynthesisParams>,
}

impl Patch {
    pub fn new(pixels: GrayImage, modality: ModalityId, origin: Origin) -> Result<Self> {
        check_patch_dims(pixels.width(), pixels.height())?;
        Ok(Self { pixels, modality, origin, seed_path: Vec::new(), synthesis: None })
    }

    pub fn from_rgb(rgb: &RgbImage, modality: ModalityId, origin: Origin) -> Result<Self> {
        Self::new(luminance(rgb), modality, origin)
    }

    pub fn with_seed_path(mut self, seed_path: impl Into<Vec<u64>>) -> Self {
        self.seed_path = seed_path.into();
        self
    }

    pub fn with_synthesis(mut self, params: SynthesisParams) -> Self {
        self.synthesis = Some(params);
        self
    }

    /// Same metadata, new pixels. Dimensions must match the current ones.
    pub fn with_pixels(&self, pixels: GrayImage) -> Result<Self> {
        if pixels.dimensions() != self.pixels.dimensions() {
            return Err(Error::Dimension(format!(
                "replacement pixels are {:?}, patch is {:?}",
                pixels.dimensions(),
                self.pixels.dimensions()
            )));
        }
        Ok(Self {
            pixels,
            modality: self.modality,
            origin: self.origin.clone(),
            seed_path: self.seed_path.clone(),
            synthesis: self.synthesis.clone(),
        })
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn pixels(&self) -> &GrayImage {
        &self.pixels
    }

    pub fn into_pixels(self) -> GrayImage {
        self.pixels
    }

    pub fn modality(&self) -> ModalityId {
        self.modality
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn seed_path(&self) -> &[u64] {
        &self.seed_path
    }

    pub fn synthesis(&self) -> Option<&SynthesisParams> {
        self.synthesis.as_ref()
    }
}

pub(crate) fn check_patch_dims(width: u32, height: u32) -> Result<()> {
    if !PATCH_SIZES.contains(&width) || !PATCH_SIZES.contains(&height) {
        return Err(Error::Dimension(format!("patch is {width}x{height}; sides must be one of {PATCH_SIZES:?}")));
    }
    Ok(())
}

/// Rec. 601 luma, `(299 R + 587 G + 114 B) / 1000` rounded half up.
pub fn luminance(rgb: &RgbImage) -> GrayImage {
    GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
        let [r, g, b] = rgb.get_pixel(x, y).0;
        let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
        image::Luma([((weighted + 500) / 1000) as u8])
    })
}

/// A binary grid. Used for ground-truth masks and binarized predictions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
    positive: usize,
}

/// Per-pixel defect annotation aligned to a patch.
pub type GroundTruthMask = BinaryMask;

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("positive", &self.positive)
            .finish()
    }
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![false; (width * height) as usize], positive: 0 }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::Dimension(format!("{} mask values for a {width}x{height} grid", data.len())));
        }
        let positive = data.iter().filter(|&&v| v).count();
        Ok(Self { width, height, data, positive })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        let positive = data.iter().filter(|&&v| v).count();
        Self { width, height, data, positive }
    }

    /// Nonzero pixels are positive.
    pub fn from_gray(image: &GrayImage) -> Self {
        Self::from_fn(image.width(), image.height(), |x, y| image.get_pixel(x, y).0[0] != 0)
    }

    /// Positive pixels are written as 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| image::Luma([if self.get(x, y) { 255 } else { 0 }]))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y * self.width + x) as usize]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn positive_pixel_count(&self) -> usize {
        self.positive
    }

    pub fn is_empty(&self) -> bool {
        self.positive == 0
    }

    /// Removes `border` pixels from every side.
    pub fn crop_border(&self, border: u32) -> Result<Self> {
        let (w, h) = crop_dims(self.width, self.height, border)?;
        Ok(Self::from_fn(w, h, |x, y| self.get(x + border, y + border)))
    }
}

pub(crate) fn crop_dims(width: u32, height: u32, border: u32) -> Result<(u32, u32)> {
    if 2 * border >= width || 2 * border >= height {
        return Err(Error::Dimension(format!("border crop {border} leaves nothing of a {width}x{height} grid")));
    }
    Ok((width - 2 * border, height - 2 * border))
}
