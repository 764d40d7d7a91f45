use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::check_scores;
use crate::metrics::confusion::ConfusionCounts;

/// `2 tp / (2 tp + fp + fn)`; 0 when there are no true positives.
pub fn f1_score(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        return 0.0;
    }
    (2 * c.tp) as f64 / (2 * c.tp + c.fp + c.fn_) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    #[serde(with = "crate::metrics::evaluate::extended_f64")]
    pub threshold: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

/// Exact comparison of two F1 values: `2a/(2a+b)` vs `2c/(2c+d)`.
fn cmp_f1(a: &ConfusionCounts, b: &ConfusionCounts) -> Ordering {
    let key = |c: &ConfusionCounts| (2 * c.tp as u128, (2 * c.tp + c.fp + c.fn_) as u128);
    let (na, da) = key(a);
    let (nb, db) = key(b);
    (na * db).cmp(&(nb * da))
}

/// Threshold maximizing image-level F1.
///
/// Candidates are `-inf`, the midpoints between consecutive distinct scores,
/// and `+inf`. Ties go to the lower false positive rate, then to the larger
/// threshold. Comparisons use exact integer arithmetic.
pub fn optimal_f1_threshold(samples: &[(f64, bool)]) -> Result<ThresholdChoice> {
    check_scores(samples)?;
    let positives = samples.iter().filter(|(_, p)| *p).count() as u64;
    if positives == 0 {
        return Err(Error::Undefined("F1 threshold search needs at least one positive".into()));
    }
    let negatives = samples.len() as u64 - positives;

    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // Everything predicted defective at -inf; each step raises the threshold
    // past one tie group, moving that group to the negative side.
    let mut counts = ConfusionCounts::new(0, positives, 0, negatives);
    let mut best = ThresholdChoice { threshold: f64::NEG_INFINITY, f1: f1_score(&counts), counts };
    let consider = |best: &mut ThresholdChoice, threshold: f64, counts: ConfusionCounts| {
        let better = match cmp_f1(&counts, &best.counts) {
            Ordering::Greater => true,
            Ordering::Less => false,
            // thresholds only grow, so a tie on fp prefers this later, larger one
            Ordering::Equal => counts.fp <= best.counts.fp,
        };
        if better {
            *best = ThresholdChoice { threshold, f1: f1_score(&counts), counts };
        }
    };

    let mut i = 0;
    while i < sorted.len() {
        let key = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == key {
            if sorted[i].1 {
                counts.tp -= 1;
                counts.fn_ += 1;
            } else {
                counts.fp -= 1;
                counts.tn += 1;
            }
            i += 1;
        }
        let threshold = match sorted.get(i) {
            Some(next) => key / 2.0 + next.0 / 2.0,
            None => f64::INFINITY,
        };
        consider(&mut best, threshold, counts);
    }
    Ok(best)
}
