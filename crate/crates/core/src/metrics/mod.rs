//! Image- and pixel-level metrics for imbalanced anomaly detection.
//!
//! Scores follow the convention "higher means more anomalous"; a sample is
//! predicted defective when its score is at or above the threshold.

mod confusion;
mod evaluate;
mod ranking;
mod regions;
mod threshold;

pub use confusion::{confusion, mcc, rates, ConfusionCounts, Rates};
pub use evaluate::{
    evaluate, render_table, EvaluateOptions, EvaluationReport, ImageMetrics, PixelMetrics, ScoreMap, ScoredSample,
};
pub use ranking::{auroc, pixel_auroc};
pub use regions::{connected_components, pro_score, Region};
pub use threshold::{f1_score, optimal_f1_threshold, ThresholdChoice};

use crate::error::{Error, Result};

pub(crate) fn check_scores(scores: &[(f64, bool)]) -> Result<()> {
    if let Some(i) = scores.iter().position(|(s, _)| s.is_nan()) {
        return Err(Error::InvalidInput(format!("score {i} is NaN")));
    }
    Ok(())
}
