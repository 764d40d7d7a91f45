//! Synthetic defect textures from a random walk with momentum.
//!
//! A walk starts at an integer pixel inside a configurable box, moves one
//! pixel per step and deposits a brush footprint at every visited position.
//! The step direction blends the previous direction with a freshly perturbed
//! heading:
//!
//! ```text
//! d_k = normalize(m * d_{k-1} + (1 - m) * unit(angle(d_{k-1}) + N(0, sigma)))
//! ```
//!
//! High momentum `m` produces elongated, fiber-like strokes; short walks with
//! wide brushes produce punctual, pinhole-like blobs. Deposits accumulate as a
//! coverage value `c <- c + w (1 - c)` that saturates at 1, so the final
//! intensity change never exceeds the drawn `intensity_delta`.

use image::GrayImage;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BinaryMask, GroundTruthMask, ModalityId, Patch, Rect};
use crate::rng::SeedScope;

/// Recorded in manifests so outputs can be tied to the exact texture model.
pub const MODEL_VERSION: &str = "momentum-walk/1";

/// Attempts made before synthesis is reported as failed.
pub const MAX_ATTEMPTS: u32 = 8;

const STEP_LENGTH: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Bright,
    Dark,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Falloff {
    /// Full weight inside the brush radius.
    Hard,
    /// Weight `exp(-2 d^2 / r^2)`, i.e. a gaussian with sigma `r / 2`, cut at `r`.
    Gaussian,
}

/// One concrete walk configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub profile: String,
    pub n_steps: u32,
    pub momentum: f64,
    /// Standard deviation of the per-step heading noise, radians.
    pub turn_sigma: f64,
    /// Each step draws its brush radius uniformly from this range.
    pub brush_radius: (f64, f64),
    pub intensity_delta: i16,
    pub polarity: Polarity,
    pub falloff: Falloff,
    pub mask_threshold: f64,
    pub center_box: Rect,
}

impl SynthesisParams {
    pub fn validate(&self, patch_size: u32) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::config(format!("synthesis.{field}"), reason));
        if self.n_steps < 1 {
            return bad("n_steps", "must be at least 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must lie in [0, 1)");
        }
        if !(self.turn_sigma >= 0.0) {
            return bad("turn_sigma", "must be non-negative");
        }
        let (lo, hi) = self.brush_radius;
        if !(lo >= 1.0 && lo <= hi) {
            return bad("brush_radius", "must satisfy 1 <= min <= max");
        }
        if self.intensity_delta.unsigned_abs() > 255 {
            return bad("intensity_delta", "must lie in [-255, 255]");
        }
        if !(self.mask_threshold >= 1.0) {
            return bad("mask_threshold", "must be at least 1");
        }
        let b = self.center_box;
        if b.width == 0 || b.height == 0 || !Rect::new(0, 0, patch_size, patch_size).contains_rect(&b) {
            return bad("center_box", "must be a nonempty box inside the patch");
        }
        Ok(())
    }
}

/// Ranges from which one morphology's parameters are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphologyProfile {
    pub name: String,
    /// Relative selection weight among the modality's profiles.
    pub weight: f64,
    pub n_steps: [u32; 2],
    pub momentum: [f64; 2],
    pub turn_sigma: [f64; 2],
    /// Copied verbatim into [`SynthesisParams::brush_radius`].
    pub brush_radius: [f64; 2],
    /// Magnitude range; the sign comes from `polarity`.
    pub intensity: [u8; 2],
    pub polarity: Polarity,
    pub falloff: Falloff,
    pub mask_threshold: [f64; 2],
    pub center_box: Rect,
}

/// Per-modality parameter table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisRanges {
    pub profiles: Vec<MorphologyProfile>,
}

fn ordered<T: PartialOrd + Copy>(r: [T; 2]) -> bool {
    r[0] <= r[1]
}

impl SynthesisRanges {
    pub fn validate(&self, prefix: &str, patch_size: u32) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::config(format!("{prefix}.profiles"), "at least one profile is required"));
        }
        for (i, p) in self.profiles.iter().enumerate() {
            let field = |name: &str| format!("{prefix}.profiles[{i}].{name}");
            let check = |ok: bool, name: &str, reason: &str| {
                if ok {
                    Ok(())
                } else {
                    Err(Error::config(field(name), reason))
                }
            };
            check(p.weight > 0.0 && p.weight.is_finite(), "weight", "must be positive")?;
            check(p.n_steps[0] >= 1 && ordered(p.n_steps), "n_steps", "must satisfy 1 <= min <= max")?;
            check(
                p.momentum[0] >= 0.0 && p.momentum[1] < 1.0 && ordered(p.momentum),
                "momentum",
                "must satisfy 0 <= min <= max < 1",
            )?;
            check(p.turn_sigma[0] >= 0.0 && ordered(p.turn_sigma), "turn_sigma", "must satisfy 0 <= min <= max")?;
            check(p.brush_radius[0] >= 1.0 && ordered(p.brush_radius), "brush_radius", "must satisfy 1 <= min <= max")?;
            check(ordered(p.intensity), "intensity", "must satisfy min <= max")?;
            check(
                p.mask_threshold[0] >= 1.0 && ordered(p.mask_threshold),
                "mask_threshold",
                "must satisfy 1 <= min <= max",
            )?;
            let b = p.center_box;
            check(
                b.width > 0 && b.height > 0 && Rect::new(0, 0, patch_size, patch_size).contains_rect(&b),
                "center_box",
                "must be a nonempty box inside the patch",
            )?;
        }
        Ok(())
    }

    /// Draws one parameter set: a profile by weight, then every field uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SynthesisParams> {
        let profile = match self.profiles.len() {
            0 => return Err(Error::config("synthesis.profiles", "no profiles configured")),
            1 => &self.profiles[0],
            _ => {
                let weights = WeightedIndex::new(self.profiles.iter().map(|p| p.weight))
                    .map_err(|e| Error::config("synthesis.profiles", e.to_string()))?;
                &self.profiles[weights.sample(rng)]
            }
        };
        let magnitude = rng.random_range(profile.intensity[0]..=profile.intensity[1]) as i16;
        let sign = match profile.polarity {
            Polarity::Bright => 1,
            Polarity::Dark => -1,
            Polarity::Mixed => {
                if rng.random_bool(0.5) {
                    1
                } else {
                    -1
                }
            }
        };
        Ok(SynthesisParams {
            profile: profile.name.clone(),
            n_steps: rng.random_range(profile.n_steps[0]..=profile.n_steps[1]),
            momentum: uniform(rng, profile.momentum),
            turn_sigma: uniform(rng, profile.turn_sigma),
            brush_radius: (profile.brush_radius[0], profile.brush_radius[1]),
            intensity_delta: sign * magnitude,
            polarity: profile.polarity,
            falloff: profile.falloff,
            mask_threshold: uniform(rng, profile.mask_threshold),
            center_box: profile.center_box,
        })
    }

    /// Shipped defaults. Punctual blobs plus elongated strokes for every
    /// modality; ASM keeps deltas small since it has no illumination
    /// augmentation to hide large brightness-like changes.
    pub fn default_for(modality: ModalityId) -> Self {
        let center = Rect::new(64, 64, 128, 128);
        let profile = |name: &str,
                       weight: f64,
                       n_steps: [u32; 2],
                       momentum: [f64; 2],
                       turn_sigma: [f64; 2],
                       brush_radius: [f64; 2],
                       intensity: [u8; 2],
                       polarity: Polarity| MorphologyProfile {
            name: name.to_string(),
            weight,
            n_steps,
            momentum,
            turn_sigma,
            brush_radius,
            intensity,
            polarity,
            falloff: Falloff::Gaussian,
            mask_threshold: [4.0, 8.0],
            center_box: center,
        };
        let profiles = match modality {
            ModalityId::Lsm1 => vec![
                profile("punctual", 0.5, [1, 12], [0.0, 0.5], [0.3, 1.2], [1.5, 3.5], [40, 120], Polarity::Mixed),
                profile(
                    "elongated",
                    0.5,
                    [60, 220],
                    [0.9, 0.97],
                    [0.05, 0.25],
                    [1.0, 2.0],
                    [30, 100],
                    Polarity::Bright,
                ),
            ],
            ModalityId::Lsm2 => vec![
                profile("pinhole", 0.5, [1, 6], [0.0, 0.3], [0.3, 1.2], [2.0, 4.0], [60, 160], Polarity::Bright),
                profile("elongated", 0.5, [60, 220], [0.9, 0.97], [0.05, 0.25], [1.0, 2.0], [40, 120], Polarity::Mixed),
            ],
            ModalityId::Asm => vec![
                profile("punctual", 0.5, [1, 12], [0.0, 0.5], [0.3, 1.2], [1.5, 3.5], [20, 80], Polarity::Mixed),
                profile("elongated", 0.5, [40, 160], [0.9, 0.97], [0.05, 0.25], [1.0, 2.0], [20, 80], Polarity::Dark),
            ],
        };
        Self { profiles }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

/// Draws parameters for `modality` from its range table.
pub fn sample_params<R: Rng + ?Sized>(
    modality: ModalityId,
    tables: &std::collections::BTreeMap<ModalityId, SynthesisRanges>,
    rng: &mut R,
) -> Result<SynthesisParams> {
    tables
        .get(&modality)
        .ok_or_else(|| Error::config(format!("modality.{}.synthesis", modality.key()), "no range table configured"))?
        .sample(rng)
}

/// One deposit of the walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStep {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// A signed intensity change and the pixels where its magnitude reaches the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectTexture {
    width: u32,
    height: u32,
    delta: Vec<i16>,
    support: BinaryMask,
    trajectory: Vec<WalkStep>,
    params: SynthesisParams,
}

impl DefectTexture {
    /// Builds a texture from an explicit delta field; support is `|delta| >= threshold`.
    pub fn from_delta(width: u32, height: u32, delta: Vec<i16>, params: SynthesisParams) -> Result<Self> {
        if delta.len() != (width * height) as usize {
            return Err(Error::Dimension(format!("{} delta values for {width}x{height}", delta.len())));
        }
        let tau = params.mask_threshold;
        let support = BinaryMask::from_vec(width, height, delta.iter().map(|&d| d.abs() as f64 >= tau).collect())?;
        Ok(Self { width, height, delta, support, trajectory: Vec::new(), params })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn delta(&self) -> &[i16] {
        &self.delta
    }

    pub fn delta_at(&self, x: u32, y: u32) -> i16 {
        self.delta[(y * self.width + x) as usize]
    }

    pub fn support(&self) -> &BinaryMask {
        &self.support
    }

    pub fn trajectory(&self) -> &[WalkStep] {
        &self.trajectory
    }

    pub fn params(&self) -> &SynthesisParams {
        &self.params
    }
}

/// Runs the walk and thresholds the result. A walk whose support comes out
/// empty is retried with fresh draws from `rng`, up to [`MAX_ATTEMPTS`] times.
pub fn walk_texture<R: Rng + ?Sized>(params: &SynthesisParams, patch_size: u32, rng: &mut R) -> Result<DefectTexture> {
    params.validate(patch_size)?;
    for _ in 0..MAX_ATTEMPTS {
        let (coverage, trajectory) = run_walk(params, patch_size, rng)?;
        let intensity = params.intensity_delta as f64;
        let delta: Vec<i16> = coverage.iter().map(|&c| (intensity * c).round() as i16).collect();
        let mut texture = DefectTexture::from_delta(patch_size, patch_size, delta, params.clone())?;
        if !texture.support.is_empty() {
            texture.trajectory = trajectory;
            return Ok(texture);
        }
    }
    Err(Error::SynthesisFailed { attempts: MAX_ATTEMPTS, reason: "walk produced an empty support".into() })
}

fn run_walk<R: Rng + ?Sized>(params: &SynthesisParams, size: u32, rng: &mut R) -> Result<(Vec<f64>, Vec<WalkStep>)> {
    let b = params.center_box;
    let mut x = rng.random_range(b.x..b.right()) as f64;
    let mut y = rng.random_range(b.y..b.bottom()) as f64;
    let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
    let (mut dx, mut dy) = (heading.cos(), heading.sin());
    let noise =
        Normal::new(0.0, params.turn_sigma).map_err(|e| Error::config("synthesis.turn_sigma", e.to_string()))?;
    let (r_lo, r_hi) = params.brush_radius;
    let m = params.momentum;

    let mut coverage = vec![0.0f64; (size * size) as usize];
    let mut trajectory = Vec::with_capacity(params.n_steps as usize);
    for step in 0..params.n_steps {
        if step > 0 {
            let turned = heading + noise.sample(rng);
            let cx = m * dx + (1.0 - m) * turned.cos();
            let cy = m * dy + (1.0 - m) * turned.sin();
            let norm = cx.hypot(cy);
            (dx, dy) = if norm > 1e-12 { (cx / norm, cy / norm) } else { (turned.cos(), turned.sin()) };
            heading = dy.atan2(dx);
            x += STEP_LENGTH * dx;
            y += STEP_LENGTH * dy;
        }
        let radius = if r_lo == r_hi { r_lo } else { rng.random_range(r_lo..=r_hi) };
        deposit(&mut coverage, size, x, y, radius, params.falloff);
        trajectory.push(WalkStep { x, y, radius });
    }
    Ok((coverage, trajectory))
}

fn deposit(coverage: &mut [f64], size: u32, cx: f64, cy: f64, radius: f64, falloff: Falloff) {
    let r2 = radius * radius;
    let x0 = (cx - radius).floor().max(0.0);
    let y0 = (cy - radius).floor().max(0.0);
    let x1 = (cx + radius).ceil().min(size as f64 - 1.0);
    let y1 = (cy + radius).ceil().min(size as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    for py in y0 as u32..=y1 as u32 {
        for px in x0 as u32..=x1 as u32 {
            let d2 = (px as f64 - cx).powi(2) + (py as f64 - cy).powi(2);
            if d2 >= r2 {
                continue;
            }
            let w = match falloff {
                Falloff::Hard => 1.0,
                Falloff::Gaussian => (-2.0 * d2 / r2).exp(),
            };
            let c = &mut coverage[(py * size + px) as usize];
            *c += w * (1.0 - *c);
        }
    }
}

/// Blends a texture into a patch with saturating 8-bit arithmetic.
///
/// The mask marks pixels that changed by at least one intensity unit and lie
/// in the texture support. An empty mask is returned as-is; callers treat it
/// as a failed synthesis.
pub fn apply_defect(patch: &Patch, texture: &DefectTexture) -> Result<(Patch, GroundTruthMask)> {
    let (w, h) = (patch.width(), patch.height());
    if (texture.width, texture.height) != (w, h) {
        return Err(Error::Dimension(format!("texture is {}x{}, patch is {w}x{h}", texture.width, texture.height)));
    }
    let input = patch.pixels();
    let mut changed = Vec::with_capacity((w * h) as usize);
    let out = GrayImage::from_fn(w, h, |x, y| {
        let idx = (y * w + x) as usize;
        let before = input.get_pixel(x, y).0[0];
        let after = (before as i32 + texture.delta[idx] as i32).clamp(0, 255) as u8;
        // from_fn visits pixels in raster order, matching idx
        changed.push(after != before && texture.support.as_slice()[idx]);
        image::Luma([after])
    });
    let mask = BinaryMask::from_vec(w, h, changed)?;
    let defective = patch.with_pixels(out)?.with_synthesis(texture.params.clone());
    Ok((defective, mask))
}

/// A defective patch with its exact mask.
#[derive(Clone, Debug)]
pub struct SyntheticDefect {
    pub patch: Patch,
    pub mask: GroundTruthMask,
    pub params: SynthesisParams,
    /// Zero-based index of the attempt that succeeded.
    pub attempt: u32,
}

/// Samples parameters, walks and blends until the mask is nonempty.
/// Attempt `k` draws from `scope.child(k)`.
pub fn synthesize(patch: &Patch, ranges: &SynthesisRanges, scope: &SeedScope) -> Result<SyntheticDefect> {
    let size = patch.width();
    if patch.height() != size {
        return Err(Error::Dimension(format!("synthesis needs a square patch, got {}x{}", size, patch.height())));
    }
    let mut last_reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = scope.child(attempt as u64).rng();
        let params = ranges.sample(&mut rng)?;
        let texture = match walk_texture(&params, size, &mut rng) {
            Ok(t) => t,
            Err(Error::SynthesisFailed { reason, .. }) => {
                last_reason = reason;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (defective, mask) = apply_defect(patch, &texture)?;
        if mask.is_empty() {
            last_reason = "blend saturated every support pixel".into();
            continue;
        }
        return Ok(SyntheticDefect { patch: defective.with_seed_path(scope.path().to_vec()), mask, params, attempt });
    }
    Err(Error::SynthesisFailed { attempts: MAX_ATTEMPTS, reason: last_reason })
}

/// Synthesizes one defect per patch in parallel; patch `i` uses `scope.child(i)`.
pub fn synthesize_batch(
    patches: &[Patch],
    ranges: &SynthesisRanges,
    scope: &SeedScope,
) -> Vec<Result<SyntheticDefect>> {
    patches.par_iter().enumerate().map(|(i, patch)| synthesize(patch, ranges, &scope.child(i as u64))).collect()
}
