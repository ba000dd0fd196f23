//! The confidence-to-pseudo-probability transformation, the two
//! reclassification modes, and group vote aggregation.
//!
//! Run with: `cargo run --example confidence_labels`

use std::collections::BTreeMap;

use alscreen::data::{ConfidenceLabel, InstanceId};
use alscreen::labels::{aggregate_group, reclassify_targets, to_pseudo_class, ReclassifyMode};

fn main() -> alscreen::Result<()> {
    // A binary verdict plus 0..=10 confidence maps to an 11-class
    // pseudo-probability of the instance being anomalous. An annotator with
    // zero confidence in "not anomalous" is maximal evidence for
    // "anomalous", so (0, 0) and (1, 10) coincide at class 10.
    println!("confidence:   0  1  2  3  4  5  6  7  8  9 10");
    for label in [0u8, 1] {
        let row: Vec<String> = (0..=10u8)
            .map(|c| format!("{:2}", to_pseudo_class(label, c).unwrap()))
            .collect();
        println!("label {label}:     {}", row.join(" "));
    }

    // Low-confidence "not anomalous" verdicts already lean anomalous under
    // the pure transformation; oracle mode additionally promotes known
    // misses to class 10 (it consults ground truth, so it leaks evaluation
    // information into training and is off by default).
    let verdicts = vec![
        ConfidenceLabel {
            instance_id: "e1".into(),
            annotator_id: "a".into(),
            label: 0,
            confidence: 4,
            round: 1,
        },
        ConfidenceLabel {
            instance_id: "e2".into(),
            annotator_id: "a".into(),
            label: 0,
            confidence: 9,
            round: 1,
        },
    ];
    let truth: BTreeMap<InstanceId, bool> = [("e1".into(), true), ("e2".into(), false)]
        .into_iter()
        .collect();
    let midpoint = reclassify_targets(&verdicts, ReclassifyMode::Midpoint, None)?;
    let oracle = reclassify_targets(&verdicts, ReclassifyMode::Oracle, Some(&truth))?;
    println!(
        "\nhesitant miss on e1: midpoint class {}, oracle class {}",
        midpoint[0].pseudo_class, oracle[0].pseudo_class
    );
    println!(
        "confident pass on e2: midpoint class {}, oracle class {}",
        midpoint[1].pseudo_class, oracle[1].pseudo_class
    );

    // Group resolution: anomalous if at least `threshold` members say so;
    // the aggregate confidence is the mean among agreeing voters.
    let votes: Vec<ConfidenceLabel> = [(1u8, 8u8), (1, 6), (0, 9), (0, 7), (0, 5)]
        .iter()
        .enumerate()
        .map(|(i, (label, confidence))| ConfidenceLabel {
            instance_id: "e9".into(),
            annotator_id: format!("a{i}").as_str().into(),
            label: *label,
            confidence: *confidence,
            round: 1,
        })
        .collect();
    let (label, confidence) = aggregate_group(&votes, 2)?;
    println!("\nvotes [1, 1, 0, 0, 0] with threshold 2 resolve to label {label} (confidence {confidence})");
    Ok(())
}
