use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::confusion::{confusion, mcc, rates, ConfusionCounts};
use crate::metrics::ranking::{auroc, pixel_auroc};
use crate::metrics::regions::pro_score;
use crate::metrics::threshold::{f1_score, optimal_f1_threshold};
use crate::model::{crop_dims, BinaryMask, GroundTruthMask, ImageLabel};

/// Per-pixel anomaly scores, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl ScoreMap {
    pub fn from_vec(width: u32, height: u32, values: Vec<f32>) -> Result<Self> {
        if values.len() != (width as usize) * (height as usize) {
            return Err(Error::Dimension(format!("{} values for a {width}x{height} map", values.len())));
        }
        Ok(Self { width, height, values })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Self {
        let mut values = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self { width, height, values }
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.values[(y * self.width + x) as usize]
    }

    /// Largest value; `-inf` for an empty map.
    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64))
    }

    pub fn crop_border(&self, border: u32) -> Result<Self> {
        let (w, h) = crop_dims(self.width, self.height, border)?;
        Ok(Self::from_fn(w, h, |x, y| self.get(x + border, y + border)))
    }

    /// Pixels at or above `threshold`.
    pub fn binarize(&self, threshold: f64) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.get(x, y) as f64 >= threshold)
    }
}

/// One evaluated test image. Without an explicit image score the map maximum is used.
#[derive(Clone, Debug)]
pub struct ScoredSample {
    pub id: String,
    pub image_score: Option<f64>,
    pub label: ImageLabel,
    pub anomaly_map: Option<ScoreMap>,
    pub mask: Option<GroundTruthMask>,
}

impl ScoredSample {
    pub fn score(&self) -> Result<f64> {
        match (self.image_score, &self.anomaly_map) {
            (Some(s), _) => Ok(s),
            (None, Some(map)) => Ok(map.max()),
            (None, None) => Err(Error::InvalidInput(format!("sample {} has neither a score nor a map", self.id))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluateOptions {
    /// Pixels dropped from each side of maps and masks before pixel metrics.
    pub border_crop: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub auroc: f64,
    pub mcc: f64,
    pub f1: f64,
    pub recall: f64,
    pub precision: f64,
    pub fpr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub auroc: f64,
    pub pro: f64,
    #[serde(with = "extended_f64")]
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    #[serde(with = "extended_f64")]
    pub threshold: f64,
    pub image: ImageMetrics,
    pub pixel: Option<PixelMetrics>,
    pub counts: ConfusionCounts,
    pub border_crop: u32,
}

/// Image metrics at the optimal-F1 threshold and, when every sample carries
/// a map, pixel AUROC and PRO.
///
/// Maps are binarized at the optimal-F1 threshold of their max-pooled scores,
/// so a pixel fires exactly when the max rule would flag its image.
pub fn evaluate(samples: &[ScoredSample], options: &EvaluateOptions) -> Result<EvaluationReport> {
    let scores = samples.iter().map(|s| Ok((s.score()?, s.label.is_defective()))).collect::<Result<Vec<_>>>()?;
    let choice = optimal_f1_threshold(&scores)?;
    let counts = confusion(&scores, choice.threshold);
    let r = rates(&counts);
    let image = ImageMetrics {
        auroc: auroc(&scores)?,
        mcc: mcc(&counts),
        f1: f1_score(&counts),
        recall: r.recall,
        precision: r.precision,
        fpr: r.fpr,
    };

    let with_maps = samples.iter().filter(|s| s.anomaly_map.is_some()).count();
    let pixel = match with_maps {
        0 => None,
        n if n == samples.len() => Some(pixel_metrics(samples, options)?),
        n => return Err(Error::InvalidInput(format!("anomaly maps given for {n} of {} samples", samples.len()))),
    };

    Ok(EvaluationReport { threshold: choice.threshold, image, pixel, counts, border_crop: options.border_crop })
}

fn pixel_metrics(samples: &[ScoredSample], options: &EvaluateOptions) -> Result<PixelMetrics> {
    let mut maps = Vec::with_capacity(samples.len());
    let mut masks = Vec::with_capacity(samples.len());
    let mut pooled = Vec::with_capacity(samples.len());
    for s in samples {
        let map = s.anomaly_map.as_ref().expect("checked by caller");
        let mask = match (&s.mask, s.label) {
            (Some(m), _) => m.clone(),
            (None, ImageLabel::Good) => BinaryMask::empty(map.dimensions().0, map.dimensions().1),
            (None, ImageLabel::Defective(_)) => {
                return Err(Error::InvalidInput(format!("defective sample {} has a map but no mask", s.id)))
            }
        };
        if mask.dimensions() != map.dimensions() {
            return Err(Error::Dimension(format!(
                "sample {}: map is {:?}, mask is {:?}",
                s.id,
                map.dimensions(),
                mask.dimensions()
            )));
        }
        pooled.push((map.max(), s.label.is_defective()));
        maps.push(map.crop_border(options.border_crop)?);
        masks.push(mask.crop_border(options.border_crop)?);
    }
    let threshold = optimal_f1_threshold(&pooled)?.threshold;
    let predictions: Vec<BinaryMask> = maps.iter().map(|m| m.binarize(threshold)).collect();
    Ok(PixelMetrics { auroc: pixel_auroc(&maps, &masks)?, pro: pro_score(&predictions, &masks)?, threshold })
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// Plain-text table, rates as percentages with one decimal.
pub fn render_table(rows: &[(&str, &EvaluationReport)]) -> String {
    let header =
        ["dataset", "AUROC%", "MCC", "recall%", "precision%", "FPR%", "TN", "TP", "FN", "FP", "pixAUROC%", "PRO%"];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for (name, r) in rows {
        let (pa, pro) = match &r.pixel {
            Some(p) => (pct(p.auroc), pct(p.pro)),
            None => ("-".into(), "-".into()),
        };
        cells.push(vec![
            name.to_string(),
            pct(r.image.auroc),
            format!("{:.2}", r.image.mcc),
            pct(r.image.recall),
            pct(r.image.precision),
            pct(r.image.fpr),
            r.counts.tn.to_string(),
            r.counts.tp.to_string(),
            r.counts.fn_.to_string(),
            r.counts.fp.to_string(),
            pa,
            pro,
        ]);
    }
    let widths: Vec<usize> =
        (0..header.len()).map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// Finite values as JSON numbers, infinities as the strings `"inf"` / `"-inf"`.
pub(crate) mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DefectGroup;

    fn sample(id: &str, score: f64, defective: bool) -> ScoredSample {
        ScoredSample {
            id: id.into(),
            image_score: Some(score),
            label: if defective { ImageLabel::Defective(DefectGroup::Area) } else { ImageLabel::Good },
            anomaly_map: None,
            mask: None,
        }
    }

    #[test]
    fn image_only_evaluation() {
        let s = vec![sample("a", 0.1, false), sample("b", 0.2, false), sample("c", 0.9, true)];
        let r = evaluate(&s, &EvaluateOptions::default()).unwrap();
        assert_eq!(r.image.mcc, 1.0);
        assert_eq!(r.image.auroc, 1.0);
        assert!(r.pixel.is_none());
        assert_eq!(r.counts, ConfusionCounts::new(2, 1, 0, 0));
    }

    #[test]
    fn map_max_stands_in_for_image_score() {
        let gt = BinaryMask::from_fn(6, 6, |x, y| (2..4).contains(&x) && (2..4).contains(&y));
        let hot = ScoreMap::from_fn(6, 6, |x, y| if gt.get(x, y) { 0.9 } else { 0.1 });
        let cold = ScoreMap::from_fn(6, 6, |_, _| 0.2);
        let s = vec![
            ScoredSample {
                id: "d".into(),
                image_score: None,
                label: ImageLabel::Defective(DefectGroup::Points),
                anomaly_map: Some(hot),
                mask: Some(gt),
            },
            ScoredSample {
                id: "g".into(),
                image_score: None,
                label: ImageLabel::Good,
                anomaly_map: Some(cold),
                mask: None,
            },
        ];
        let r = evaluate(&s, &EvaluateOptions { border_crop: 1 }).unwrap();
        let p = r.pixel.unwrap();
        assert_eq!(p.pro, 1.0);
        assert_eq!(p.auroc, 1.0);
        assert_eq!(r.image.mcc, 1.0);
    }

    #[test]
    fn partial_maps_rejected() {
        let mut s = vec![sample("a", 0.1, false), sample("c", 0.9, true)];
        s[0].anomaly_map = Some(ScoreMap::from_fn(4, 4, |_, _| 0.0));
        assert!(evaluate(&s, &EvaluateOptions::default()).is_err());
    }

    #[test]
    fn infinite_threshold_round_trips_through_json() {
        let s = vec![sample("a", 0.5, true), sample("b", 0.9, false), sample("c", 0.1, false)];
        let r = evaluate(&s, &EvaluateOptions::default()).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: EvaluationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.threshold, r.threshold);
    }

    #[test]
    fn table_formats_percentages() {
        let s = vec![sample("a", 0.1, false), sample("b", 0.9, true)];
        let r = evaluate(&s, &EvaluateOptions::default()).unwrap();
        let t = render_table(&[("toy", &r)]);
        assert!(t.contains("100.0"));
        assert!(t.lines().count() == 2);
    }
}
