//! Pipeline configuration: TOML schema, defaults and validation.
//!
//! A config file only needs the keys it changes. The file is merged over the
//! built-in defaults table before deserialization, so a partially specified
//! `[modality.asm.augment]` keeps the ASM defaults for every other key. The
//! full schema is documented in `docs/config.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Modality, ModalityId};
use crate::pipeline::{AugmentationSpec, CropWindow, PreprocessSpec};
use crate::synth::SynthesisRanges;

/// An exact non-negative rational such as `1/32`.
///
/// Parsed from `"a/b"`, an integer, or a finite decimal (`0.25` becomes
/// `1/4`). Always written back as `"a/b"`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(Ratio<u32>);

impl Fraction {
    pub const ZERO: Fraction = Fraction(Ratio::new_raw(0, 1));
    pub const ONE: Fraction = Fraction(Ratio::new_raw(1, 1));
    pub const HALF: Fraction = Fraction(Ratio::new_raw(1, 2));

    pub fn new(numer: u32, denom: u32) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidInput("fraction with zero denominator".into()));
        }
        Ok(Fraction(Ratio::new(numer, denom)))
    }

    pub fn numer(self) -> u32 {
        *self.0.numer()
    }

    pub fn denom(self) -> u32 {
        *self.0.denom()
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// `floor(total * self)`, computed exactly.
    pub fn floor_of(self, total: usize) -> usize {
        ((total as u128 * self.numer() as u128) / self.denom() as u128) as usize
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("`{s}` is not a fraction (expected a/b or a decimal)"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: u32 = n.trim().parse().map_err(|_| bad())?;
            let d: u32 = d.trim().parse().map_err(|_| bad())?;
            return Fraction::new(n, d).map_err(|_| bad());
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 9
            || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
            || int.is_empty() && frac.is_empty()
        {
            return Err(bad());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let numer = int.checked_mul(denom).and_then(|v| v.checked_add(frac_v)).ok_or_else(bad)?;
        let r = Ratio::new(numer, denom);
        let (n, d) = (u32::try_from(*r.numer()).map_err(|_| bad())?, u32::try_from(*r.denom()).map_err(|_| bad())?);
        Fraction::new(n, d)
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", self.numer(), self.denom()))
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(u32),
            Float(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(t) => t,
            Raw::Int(i) => i.to_string(),
            Raw::Float(f) => format!("{f}"),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub patch_size: u32,
    pub stride: u32,
    pub crop: CropWindow,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { patch_size: 256, stride: 160, crop: CropWindow::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSettings {
    /// Probability that a stream item is replaced by a real defect.
    pub p_inject: Fraction,
    /// Probability that a fault-free draw is turned into a synthetic defect.
    pub r_syn: Fraction,
    /// Accept `p_inject >= 1/2`. Runs using it are flagged in their summaries.
    pub force_p_inject: bool,
    pub fractions: Vec<Fraction>,
}

impl Default for StreamSettings {
    fn default() -> Self {
        Self {
            p_inject: Fraction(Ratio::new_raw(1, 32)),
            r_syn: Fraction::HALF,
            force_p_inject: false,
            fractions: [16, 8, 4, 2, 1].iter().map(|&d| Fraction(Ratio::new_raw(1, d))).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalitySettings {
    /// Channels of the on-disk PNGs (1 or 3).
    pub channels: u8,
    /// Pixels removed from each side before pixel-level metrics.
    pub border_crop: u32,
    pub preprocess: PreprocessSpec,
    pub augment: AugmentationSpec,
    pub synthesis: SynthesisRanges,
}

impl ModalitySettings {
    pub fn default_for(id: ModalityId) -> Self {
        let (channels, border_crop) = match id {
            ModalityId::Lsm1 | ModalityId::Lsm2 => (3, 0),
            ModalityId::Asm => (1, 4),
        };
        Self {
            channels,
            border_crop,
            preprocess: PreprocessSpec::default_for(id),
            augment: AugmentationSpec::default_for(id),
            synthesis: SynthesisRanges::default_for(id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub geometry: Geometry,
    pub stream: StreamSettings,
    pub modality: BTreeMap<ModalityId, ModalitySettings>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            geometry: Geometry::default(),
            stream: StreamSettings::default(),
            modality: ModalityId::ALL.iter().map(|&m| (m, ModalitySettings::default_for(m))).collect(),
        }
    }
}

impl PipelineConfig {
    /// Parses TOML text merged over the defaults, then validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        let mut merged =
            toml::Table::try_from(PipelineConfig::default()).map_err(|e| Error::ConfigParse(e.to_string()))?;
        merge(&mut merged, user);
        let config: PipelineConfig =
            toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash_hex(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml_string()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed", "must fit a signed 64-bit TOML integer"));
        }
        let g = &self.geometry;
        if g.patch_size != 256 {
            return Err(Error::config("geometry.patch_size", "only 256 is supported"));
        }
        if g.stride == 0 || g.stride > g.patch_size {
            return Err(Error::config("geometry.stride", format!("must lie in 1..={}", g.patch_size)));
        }
        if g.crop.out_size != g.patch_size || g.crop.raw_size != 512 {
            return Err(Error::config("geometry.crop", "must cut 256 patches from 512 raw patches"));
        }
        g.crop.validate()?;

        let s = &self.stream;
        if s.p_inject > Fraction::ONE {
            return Err(Error::config("stream.p_inject", "must not exceed 1"));
        }
        if s.p_inject >= Fraction::HALF && !s.force_p_inject {
            return Err(Error::config("stream.p_inject", "must be below 1/2 (set force_p_inject to override)"));
        }
        if s.r_syn == Fraction::ZERO || s.r_syn > Fraction::ONE {
            return Err(Error::config("stream.r_syn", "must lie in (0, 1]"));
        }
        if s.fractions.is_empty() {
            return Err(Error::config("stream.fractions", "at least one fraction is required"));
        }
        if s.fractions.iter().any(|&f| f == Fraction::ZERO || f > Fraction::ONE) {
            return Err(Error::config("stream.fractions", "every fraction must lie in (0, 1]"));
        }

        for (id, m) in &self.modality {
            let prefix = format!("modality.{}", id.key());
            Modality::new(*id, m.channels, m.preprocess.clone())?;
            m.preprocess.validate(&format!("{prefix}.preprocess"))?;
            m.augment.validate(&format!("{prefix}.augment"))?;
            m.synthesis.validate(&format!("{prefix}.synthesis"), g.patch_size)?;
            if 2 * m.border_crop >= g.patch_size {
                return Err(Error::config(format!("{prefix}.border_crop"), "leaves no interior"));
            }
        }
        Ok(())
    }

    pub fn modality_settings(&self, id: ModalityId) -> Result<&ModalitySettings> {
        self.modality.get(&id).ok_or_else(|| Error::config(format!("modality.{}", id.key()), "not configured"))
    }

    pub fn synthesis_tables(&self) -> BTreeMap<ModalityId, SynthesisRanges> {
        self.modality.iter().map(|(&id, m)| (id, m.synthesis.clone())).collect()
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Reads and validates a config file. Missing keys take the built-in defaults.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PipelineConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(err: Error) -> String {
        match err {
            Error::Config { field, .. } => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = PipelineConfig::from_toml_str("").unwrap();
        assert_eq!(c.stream.p_inject, Fraction::new(1, 32).unwrap());
        assert_eq!(c.stream.r_syn, Fraction::new(1, 2).unwrap());
        assert_eq!(c.geometry.stride, 160);
        assert_eq!(c.geometry.patch_size, 256);
        assert_eq!(c.seed, 0);
        assert_eq!(c, PipelineConfig::default());
    }

    #[test]
    fn stride_larger_than_patch_is_rejected() {
        let err = PipelineConfig::from_toml_str("[geometry]\nstride = 512\npatch_size = 256\n").unwrap_err();
        assert!(field_of(err).contains("stride"));
    }

    #[test]
    fn seed_must_fit_toml() {
        let c = PipelineConfig { seed: u64::MAX, ..PipelineConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_injection_is_valid() {
        let c = PipelineConfig::from_toml_str("[stream]\np_inject = 0\n").unwrap();
        assert_eq!(c.stream.p_inject, Fraction::ZERO);
    }

    #[test]
    fn injection_at_half_needs_force() {
        let err = PipelineConfig::from_toml_str("[stream]\np_inject = \"1/2\"\n").unwrap_err();
        assert_eq!(field_of(err), "stream.p_inject");
        let c = PipelineConfig::from_toml_str("[stream]\np_inject = \"1/1\"\nforce_p_inject = true\n").unwrap();
        assert_eq!(c.stream.p_inject, Fraction::ONE);
    }

    #[test]
    fn partial_modality_override_keeps_its_defaults() {
        let c = PipelineConfig::from_toml_str("[modality.asm.augment]\nrotation_deg = 5.0\n").unwrap();
        let asm = c.modality_settings(ModalityId::Asm).unwrap();
        assert_eq!(asm.augment.rotation_deg, 5.0);
        assert_eq!(asm.augment.scale, [1.0, 1.2]);
        assert_eq!(asm.augment.brightness, None);
        assert_eq!(c.modality_settings(ModalityId::Lsm1).unwrap().augment.rotation_deg, 45.0);
    }

    #[test]
    fn illumination_can_be_disabled() {
        let c = PipelineConfig::from_toml_str("[modality.lsm1.augment]\nbrightness = []\n").unwrap();
        assert_eq!(c.modality_settings(ModalityId::Lsm1).unwrap().augment.brightness, None);
    }

    #[test]
    fn unknown_keys_fail_to_parse() {
        assert!(matches!(PipelineConfig::from_toml_str("[stream]\np_injekt = 0\n"), Err(Error::ConfigParse(_))));
        assert!(matches!(PipelineConfig::from_toml_str("not toml ["), Err(Error::ConfigParse(_))));
    }

    #[test]
    fn apply_prob_outside_band() {
        let err = PipelineConfig::from_toml_str("[modality.lsm2.augment]\napply_prob = 0.5\n").unwrap_err();
        assert_eq!(field_of(err), "modality.lsm2.augment.apply_prob");
    }

    #[test]
    fn round_trip_reparses_equal() {
        let c = PipelineConfig::from_toml_str("seed = 9\n[stream]\np_inject = 0.0625\nr_syn = \"3/4\"\n").unwrap();
        assert_eq!(c.stream.p_inject, Fraction::new(1, 16).unwrap());
        let again = PipelineConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash_hex().unwrap(), c.hash_hex().unwrap());
    }

    #[test]
    fn fraction_parsing() {
        assert_eq!("1/32".parse::<Fraction>().unwrap(), Fraction::new(1, 32).unwrap());
        assert_eq!("0.5".parse::<Fraction>().unwrap(), Fraction::HALF);
        assert_eq!("2/4".parse::<Fraction>().unwrap().to_string(), "1/2");
        assert_eq!("1".parse::<Fraction>().unwrap(), Fraction::ONE);
        assert!("1/0".parse::<Fraction>().is_err());
        assert!("-1".parse::<Fraction>().is_err());
        assert!("abc".parse::<Fraction>().is_err());
        assert_eq!(Fraction::new(1, 16).unwrap().floor_of(172), 10);
    }
}
