use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tn: u64,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
}

impl ConfusionCounts {
    pub fn new(tn: u64, tp: u64, fn_: u64, fp: u64) -> Self {
        Self { tn, tp, fn_, fp }
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }
}

/// Tallies `(score, is_defective)` pairs; predicted defective iff `score >= threshold`.
pub fn confusion(samples: &[(f64, bool)], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for &(score, positive) in samples {
        match (score >= threshold, positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0.0) {
        return 0.0;
    }
    let denom = factors.iter().product::<f64>().sqrt();
    // The products can exceed 2^53 for large sets; the integer form keeps the
    // numerator exact up to the final conversion.
    let numer = c.tp as i128 * c.tn as i128 - c.fp as i128 * c.fn_ as i128;
    (numer as f64 / denom).clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub recall: f64,
    pub fpr: f64,
    pub precision: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Recall, false positive rate and precision; `0/0` is taken as 0.
pub fn rates(c: &ConfusionCounts) -> Rates {
    Rates { recall: ratio(c.tp, c.tp + c.fn_), fpr: ratio(c.fp, c.fp + c.tn), precision: ratio(c.tp, c.tp + c.fp) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let c = confusion(&[(0.9, true), (0.1, false)], 0.5);
        assert_eq!(c, ConfusionCounts::new(1, 1, 0, 0));
    }

    #[test]
    fn minus_infinity_predicts_everything_defective() {
        let samples = [(0.3, true), (-5.0, false), (1e9, false), (0.0, true)];
        let c = confusion(&samples, f64::NEG_INFINITY);
        assert_eq!((c.tn, c.fn_), (0, 0));
        assert_eq!((c.tp, c.fp), (2, 2));
    }

    #[test]
    fn threshold_is_inclusive() {
        let c = confusion(&[(0.5, true), (0.5, false)], 0.5);
        assert_eq!((c.tp, c.fp), (1, 1));
    }

    #[test]
    fn mcc_perfect_and_degenerate() {
        assert_eq!(mcc(&ConfusionCounts::new(10, 5, 0, 0)), 1.0);
        assert_eq!(mcc(&ConfusionCounts::new(0, 0, 5, 10)), -1.0);
        assert_eq!(mcc(&ConfusionCounts::new(10, 0, 0, 0)), 0.0);
        assert_eq!(mcc(&ConfusionCounts::new(10, 0, 3, 0)), 0.0);
    }

    #[test]
    fn mcc_table_rows() {
        assert!((mcc(&ConfusionCounts::new(1459, 73, 22, 11)) - 0.81).abs() <= 0.005);
        assert!((mcc(&ConfusionCounts::new(1905, 46, 28, 11)) - 0.70).abs() <= 0.005);
    }

    #[test]
    fn rates_table_rows() {
        let r = rates(&ConfusionCounts::new(1459, 73, 22, 11));
        assert!((100.0 * r.recall - 76.8).abs() <= 0.05);
        assert!((100.0 * r.fpr - 0.7).abs() <= 0.05);
        let r = rates(&ConfusionCounts::new(1914, 71, 3, 2));
        assert!((100.0 * r.recall - 95.9).abs() <= 0.05);
        assert!((100.0 * r.fpr - 0.1).abs() <= 0.05);
    }

    #[test]
    fn empty_positive_convention() {
        let r = rates(&ConfusionCounts::new(5, 0, 0, 0));
        assert_eq!((r.recall, r.precision, r.fpr), (0.0, 0.0, 0.0));
    }
}
