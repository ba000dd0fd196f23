//! Confidence-label transformations: the pseudo-probability class mapping,
//! the low-confidence reclassification rule, and group vote aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{AnnotatorId, ConfidenceLabel, InstanceId, MulticlassLabel};
use crate::error::{Error, Result};

/// Map a binary verdict plus 0..=10 confidence to the pseudo-probability
/// class of the instance being anomalous, scaled to an integer 0..=10:
///
/// * label 0 → `10 - confidence`
/// * label 1 → `round_half_up((confidence + 10) / 2)`
///
/// An annotator with zero confidence in "not anomalous" is maximal evidence
/// for "anomalous", so (0, 0) and (1, 10) both map to class 10.
pub fn to_pseudo_class(label: u8, confidence: u8) -> Result<u8> {
    if label > 1 {
        return Err(Error::InvalidInput(format!(
            "label must be 0 or 1, got {label}"
        )));
    }
    if confidence > 10 {
        return Err(Error::InvalidInput(format!(
            "confidence must lie in 0..=10, got {confidence}"
        )));
    }
    Ok(if label == 0 {
        10 - confidence
    } else {
        // Exact integer round-half-up of (confidence + 10) / 2.
        (confidence + 10).div_ceil(2)
    })
}

/// Whether training targets may consult the hidden anomaly flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReclassifyMode {
    /// Pure confidence transformation; nothing leaks into training. A
    /// 0-label with confidence below 5 already lands above class 5, i.e.
    /// leaning anomalous.
    Midpoint,
    /// Additionally force the class of known anomalies that were labeled 0
    /// with confidence below 5 up to 10. Reproduces a published procedure
    /// but leaks evaluation information into training; clearly flagged.
    Oracle,
}

/// Turn resolved confidence labels into multiclass training targets.
/// `ground_truth` is required for (and only consulted in) oracle mode.
pub fn reclassify_targets(
    labels: &[ConfidenceLabel],
    mode: ReclassifyMode,
    ground_truth: Option<&BTreeMap<InstanceId, bool>>,
) -> Result<Vec<MulticlassLabel>> {
    if mode == ReclassifyMode::Oracle && ground_truth.is_none() {
        return Err(Error::InvalidInput(
            "oracle reclassification requires ground truth".into(),
        ));
    }
    labels
        .iter()
        .map(|label| {
            let mut pseudo_class = to_pseudo_class(label.label, label.confidence)?;
            if mode == ReclassifyMode::Oracle && label.label == 0 && label.confidence < 5 {
                let truth = ground_truth
                    .unwrap()
                    .get(&label.instance_id)
                    .copied()
                    .ok_or_else(|| Error::UnresolvedId(label.instance_id.to_string()))?;
                if truth {
                    pseudo_class = 10;
                }
            }
            Ok(MulticlassLabel {
                instance_id: label.instance_id.clone(),
                pseudo_class,
            })
        })
        .collect()
}

/// Resolve one instance's votes into a single label: 1 iff at least
/// `threshold` annotators voted 1. The aggregate confidence is the
/// round-half-up mean confidence among the voters that agree with the
/// aggregate label (threshold <= voter count keeps that set nonempty).
pub fn aggregate_group(
    labels_for_instance: &[ConfidenceLabel],
    threshold: usize,
) -> Result<(u8, u8)> {
    if labels_for_instance.is_empty() {
        return Err(Error::InvalidInput("no votes to aggregate".into()));
    }
    if threshold == 0 {
        return Err(Error::InvalidInput("threshold must be positive".into()));
    }
    let instance = &labels_for_instance[0].instance_id;
    if labels_for_instance
        .iter()
        .any(|l| &l.instance_id != instance)
    {
        return Err(Error::InvalidInput(
            "votes reference multiple instances".into(),
        ));
    }
    let true_votes = labels_for_instance.iter().filter(|l| l.label == 1).count();
    let label = u8::from(true_votes >= threshold);
    let agreeing: Vec<u64> = labels_for_instance
        .iter()
        .filter(|l| l.label == label)
        .map(|l| u64::from(l.confidence))
        .collect();
    let confidence = if agreeing.is_empty() {
        // Only reachable when threshold exceeds the voter count.
        round_half_up_mean(labels_for_instance.iter().map(|l| u64::from(l.confidence)))
    } else {
        round_half_up_mean(agreeing.into_iter())
    };
    Ok((label, confidence as u8))
}

fn round_half_up_mean(values: impl Iterator<Item = u64>) -> u64 {
    let (sum, n) = values.fold((0u64, 0u64), |(s, n), v| (s + v, n + 1));
    // Exact integer round-half-up of sum / n.
    (2 * sum + n) / (2 * n)
}

/// Convenience used by the team machinery: group raw labels by instance and
/// aggregate each group, emitting one resolved label per instance in batch
/// order.
pub fn aggregate_by_instance(
    raw: &[ConfidenceLabel],
    order: &[InstanceId],
    threshold: usize,
    resolved_annotator: &AnnotatorId,
    round: u32,
) -> Result<Vec<ConfidenceLabel>> {
    let mut by_instance: BTreeMap<&InstanceId, Vec<ConfidenceLabel>> = BTreeMap::new();
    for label in raw {
        by_instance
            .entry(&label.instance_id)
            .or_default()
            .push(label.clone());
    }
    order
        .iter()
        .map(|id| {
            let votes = by_instance
                .get(id)
                .ok_or_else(|| Error::UnresolvedId(format!("no votes for {id}")))?;
            let (label, confidence) = aggregate_group(votes, threshold)?;
            Ok(ConfidenceLabel {
                instance_id: id.clone(),
                annotator_id: resolved_annotator.clone(),
                label,
                confidence,
                round,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vote(instance: &str, annotator: &str, label: u8, confidence: u8) -> ConfidenceLabel {
        ConfidenceLabel {
            instance_id: instance.into(),
            annotator_id: annotator.into(),
            label,
            confidence,
            round: 1,
        }
    }

    #[test]
    fn pseudo_class_anchor_values() {
        assert_eq!(to_pseudo_class(0, 10).unwrap(), 0);
        assert_eq!(to_pseudo_class(1, 10).unwrap(), 10);
        assert_eq!(to_pseudo_class(1, 0).unwrap(), 5);
        assert_eq!(to_pseudo_class(1, 5).unwrap(), 8);
        assert_eq!(to_pseudo_class(0, 0).unwrap(), 10);
    }

    #[test]
    fn pseudo_class_full_table() {
        // Direct substitution with round-half-up.
        let expected_label0 = [10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0];
        let expected_label1 = [5, 6, 6, 7, 7, 8, 8, 9, 9, 10, 10];
        for confidence in 0..=10u8 {
            assert_eq!(
                to_pseudo_class(0, confidence).unwrap(),
                expected_label0[confidence as usize]
            );
            assert_eq!(
                to_pseudo_class(1, confidence).unwrap(),
                expected_label1[confidence as usize]
            );
        }
    }

    #[test]
    fn zero_confidence_false_equals_full_confidence_true() {
        assert_eq!(
            to_pseudo_class(0, 0).unwrap(),
            to_pseudo_class(1, 10).unwrap()
        );
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert!(to_pseudo_class(0, 11).is_err());
        assert!(to_pseudo_class(2, 5).is_err());
    }

    #[test]
    fn midpoint_mode_is_pure_transformation() {
        let labels = vec![vote("e1", "a", 0, 4)];
        let out = reclassify_targets(&labels, ReclassifyMode::Midpoint, None).unwrap();
        assert_eq!(out[0].pseudo_class, 6);
    }

    #[test]
    fn oracle_mode_promotes_missed_anomalies() {
        let labels = vec![vote("e1", "a", 0, 4), vote("e2", "a", 0, 4)];
        let truth: BTreeMap<InstanceId, bool> = [
            (InstanceId::from("e1"), true),
            (InstanceId::from("e2"), false),
        ]
        .into_iter()
        .collect();
        let out = reclassify_targets(&labels, ReclassifyMode::Oracle, Some(&truth)).unwrap();
        assert_eq!(out[0].pseudo_class, 10);
        assert_eq!(out[1].pseudo_class, 6);
    }

    #[test]
    fn oracle_mode_leaves_true_labels_alone() {
        let labels = vec![vote("e1", "a", 1, 2)];
        let truth: BTreeMap<InstanceId, bool> =
            [(InstanceId::from("e1"), true)].into_iter().collect();
        let out = reclassify_targets(&labels, ReclassifyMode::Oracle, Some(&truth)).unwrap();
        assert_eq!(out[0].pseudo_class, to_pseudo_class(1, 2).unwrap());
    }

    #[test]
    fn oracle_mode_without_truth_is_an_error() {
        let labels = vec![vote("e1", "a", 0, 4)];
        assert!(reclassify_targets(&labels, ReclassifyMode::Oracle, None).is_err());
    }

    #[test]
    fn two_of_five_rule() {
        let votes: Vec<ConfidenceLabel> = [(1, 7), (1, 6), (0, 8), (0, 9), (0, 5)]
            .iter()
            .enumerate()
            .map(|(i, (l, c))| vote("e1", &format!("a{i}"), *l, *c))
            .collect();
        let (label, _) = aggregate_group(&votes, 2).unwrap();
        assert_eq!(label, 1);

        let votes: Vec<ConfidenceLabel> = [(1, 7), (0, 6), (0, 8), (0, 9), (0, 5)]
            .iter()
            .enumerate()
            .map(|(i, (l, c))| vote("e1", &format!("a{i}"), *l, *c))
            .collect();
        let (label, _) = aggregate_group(&votes, 2).unwrap();
        assert_eq!(label, 0);
    }

    #[test]
    fn aggregate_confidence_is_mean_of_agreeing_voters() {
        let votes: Vec<ConfidenceLabel> = [(1, 8), (1, 6), (0, 1), (0, 2), (0, 3)]
            .iter()
            .enumerate()
            .map(|(i, (l, c))| vote("e1", &format!("a{i}"), *l, *c))
            .collect();
        let (label, confidence) = aggregate_group(&votes, 2).unwrap();
        assert_eq!((label, confidence), (1, 7));
    }

    #[test]
    fn aggregate_rejects_empty_and_mixed_instances() {
        assert!(aggregate_group(&[], 2).is_err());
        let votes = vec![vote("e1", "a", 1, 5), vote("e2", "b", 1, 5)];
        assert!(aggregate_group(&votes, 2).is_err());
    }

    proptest! {
        #[test]
        fn pseudo_class_ranges_and_monotonicity(confidence in 0u8..=10) {
            let from_true = to_pseudo_class(1, confidence).unwrap();
            prop_assert!((5..=10).contains(&from_true));
            let from_false = to_pseudo_class(0, confidence).unwrap();
            prop_assert!(from_false <= 10);
            if confidence < 10 {
                // Monotone within each branch as confidence rises.
                prop_assert!(to_pseudo_class(1, confidence + 1).unwrap() >= from_true);
                prop_assert!(to_pseudo_class(0, confidence + 1).unwrap() <= from_false);
            }
        }

        #[test]
        fn flipping_a_vote_to_true_never_flips_aggregate_to_false(
            labels in proptest::collection::vec((0u8..=1, 0u8..=10), 1..8),
            threshold in 1usize..=5,
            flip in 0usize..8,
        ) {
            let votes: Vec<ConfidenceLabel> = labels
                .iter()
                .enumerate()
                .map(|(i, (l, c))| vote("e1", &format!("a{i}"), *l, *c))
                .collect();
            let (before, _) = aggregate_group(&votes, threshold).unwrap();
            let mut flipped = votes.clone();
            let at = flip % flipped.len();
            flipped[at].label = 1;
            let (after, _) = aggregate_group(&flipped, threshold).unwrap();
            prop_assert!(!(before == 1 && after == 0));
        }
    }
}
