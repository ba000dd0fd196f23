//! Evaluation mathematics: precision-recall curves, average precision,
//! F-beta, the HRQ agreement rate, inter-rater agreement and trend tests.
//!
//! Every function here is pure; identical inputs produce bit-identical
//! outputs.

pub mod agreement;
pub mod special;
pub mod trend;

pub use agreement::{krippendorff_alpha, AlphaMetric};
pub use trend::{jonckheere_terpstra, pearson_trend, JtResult, PearsonResult, TrendAlternative};

use serde::{Deserialize, Serialize};

use crate::data::RoundLog;
use crate::error::{Error, Result};

/// One operating point of a precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision-recall curve swept over the distinct scores in descending
/// order, anchored at (recall 0, precision 1). Instances are classified
/// positive when their score is at or above the threshold; sorting ties are
/// broken by ascending instance index.
pub fn pr_curve(scores: &[f64], truth: &[bool]) -> Result<Vec<PrPoint>> {
    if scores.len() != truth.len() {
        return Err(Error::InvalidInput(
            "scores and truth lengths differ".into(),
        ));
    }
    let positives = truth.iter().filter(|t| **t).count();
    if positives == 0 {
        return Err(Error::Undefined(
            "undefined recall: no positive instances".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut points = vec![PrPoint {
        recall: 0.0,
        precision: 1.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0usize;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole tie group at this threshold.
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            recall: tp as f64 / positives as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(points)
}

/// Area under the precision-recall curve as average precision:
/// sum of (R_i - R_{i-1}) * P_i over the descending-score sweep. Step
/// interpolation, no linear smoothing between points.
pub fn auprc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    let points = pr_curve(scores, truth)?;
    let mut area = 0.0;
    for pair in points.windows(2) {
        area += (pair[1].recall - pair[0].recall) * pair[1].precision;
    }
    Ok(area)
}

/// F-beta score: (1 + b²) P R / (b² P + R), with the P = R = 0 case defined
/// as 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    let b2 = beta * beta;
    let denominator = b2 * precision + recall;
    if denominator == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * precision * recall / denominator
}

/// Fraction of the round's HRQ instances whose resolved label is 1.
pub fn hrq_true_rate(round_log: &RoundLog) -> Result<f64> {
    if round_log.batch.hrq_ids.is_empty() {
        return Err(Error::Undefined("round has no HRQ instances".into()));
    }
    let mut labeled_true = 0usize;
    for id in &round_log.batch.hrq_ids {
        let label = round_log
            .resolved
            .iter()
            .find(|l| &l.instance_id == id)
            .ok_or_else(|| Error::UnresolvedId(format!("no resolved label for {id}")))?;
        if label.label == 1 {
            labeled_true += 1;
        }
    }
    Ok(labeled_true as f64 / round_log.batch.hrq_ids.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ConfidenceLabel, QueryBatch};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn perfect_separation_passes_through_the_corner() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let truth = [true, true, false, false];
        let points = pr_curve(&scores, &truth).unwrap();
        assert!(points.iter().any(|p| p.recall == 1.0 && p.precision == 1.0));
        assert_eq!(auprc(&scores, &truth).unwrap(), 1.0);
    }

    #[test]
    fn constant_scores_collapse_to_prevalence() {
        let scores = [0.5; 10];
        let truth = [
            true, false, false, false, true, false, false, false, false, false,
        ];
        let points = pr_curve(&scores, &truth).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[1].recall, 1.0);
        assert_eq!(points[1].precision, 0.2);
        assert!((auprc(&scores, &truth).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn four_point_example_matches_threshold_oracle() {
        let scores = [0.9, 0.8, 0.7, 0.6];
        let truth = [true, false, true, false];
        // Exhaustive threshold enumeration: thresholds at each distinct
        // score give (R, P) = (1/2, 1), (1/2, 1/2), (1, 2/3), (1, 1/2);
        // average precision = 1/2 * 1 + 1/2 * 2/3 = 5/6.
        let got = auprc(&scores, &truth).unwrap();
        assert!((got - 5.0 / 6.0).abs() < 1e-12, "auprc = {got}");
    }

    #[test]
    fn no_positives_is_an_error() {
        assert!(matches!(
            auprc(&[0.3, 0.4], &[false, false]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn f_beta_anchor_values() {
        assert!((f_beta(0.5, 0.5, 1.0) - 0.5).abs() < 1e-12);
        assert_eq!(f_beta(1.0, 0.0, 1.0), 0.0);
        assert!((f_beta(0.5, 1.0, 2.0) - 5.0 / 6.0).abs() < 1e-4);
        assert_eq!(f_beta(0.0, 0.0, 1.0), 0.0);
    }

    fn log_with_hrq_labels(labels: &[u8]) -> RoundLog {
        let hrq_ids: Vec<_> = (0..labels.len())
            .map(|i| crate::data::InstanceId(format!("e{i}")))
            .collect();
        let resolved: Vec<ConfidenceLabel> = hrq_ids
            .iter()
            .zip(labels)
            .map(|(id, label)| ConfidenceLabel {
                instance_id: id.clone(),
                annotator_id: "a".into(),
                label: *label,
                confidence: 5,
                round: 1,
            })
            .collect();
        RoundLog {
            round: 1,
            batch: QueryBatch {
                round: 1,
                hrq_ids,
                uq_ids: vec![],
                rq_ids: vec![],
            },
            labels: resolved.clone(),
            resolved,
            transformed: vec![],
            model_metrics: BTreeMap::new(),
            hrq_true_rate: 0.0,
        }
    }

    #[test]
    fn hrq_rate_counts_true_labels() {
        let mut labels = vec![1u8; 7];
        labels.extend(vec![0u8; 7]);
        assert_eq!(hrq_true_rate(&log_with_hrq_labels(&labels)).unwrap(), 0.5);
        assert_eq!(
            hrq_true_rate(&log_with_hrq_labels(&[1, 1, 1])).unwrap(),
            1.0
        );
        assert_eq!(
            hrq_true_rate(&log_with_hrq_labels(&[0, 0, 0])).unwrap(),
            0.0
        );
        assert!(hrq_true_rate(&log_with_hrq_labels(&[])).is_err());
    }

    proptest! {
        #[test]
        fn auprc_invariant_under_increasing_transforms(
            raw in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 3..40)
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s).collect();
            let truth: Vec<bool> = raw.iter().map(|(_, t)| *t).collect();
            prop_assume!(truth.iter().any(|t| *t));
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 1.0).collect();
            let a = auprc(&scores, &truth).unwrap();
            let b = auprc(&transformed, &truth).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn f1_is_harmonic_mean(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            prop_assume!(p + r > 0.0);
            let harmonic = 2.0 * p * r / (p + r);
            prop_assert!((f_beta(p, r, 1.0) - harmonic).abs() < 1e-12);
        }
    }
}
