//! Shared domain types: email records, labels, query batches and round logs.
//!
//! Everything here is an immutable value type; construction is the only
//! mutation point, so instances are safe to share across threads.
//!
//! The anomaly flag (`ground_truth`) lives on [`EmailRecord`] but is stripped
//! from every learner- and annotator-facing view through
//! [`EmailRecord::blinded`]. Featurization accepts only [`BlindedRecord`], so
//! there is no code path from the flag into a feature vector.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of one email instance, unique within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstanceId(pub String);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for InstanceId {
    fn from(s: &str) -> Self {
        InstanceId(s.to_string())
    }
}

/// Identifier of an annotator (human or simulated).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotatorId(pub String);

impl fmt::Display for AnnotatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AnnotatorId {
    fn from(s: &str) -> Self {
        AnnotatorId(s.to_string())
    }
}

/// One redacted outbound email: metadata only, no body or attachment content.
///
/// `ground_truth` is hidden from annotator- and learner-facing views; it is
/// consumed only by evaluation and by the annotator simulator's difficulty
/// model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmailRecord {
    pub id: InstanceId,
    pub sender_name: String,
    pub sender_address: String,
    pub recipient_addresses: Vec<String>,
    pub recipient_count: u32,
    /// Sensitive term present in the subject line.
    pub subject_sensitive: bool,
    /// Sensitive term present in an attachment name.
    pub attachment_sensitive: bool,
    pub attachment_count: u32,
    /// Total attachment size in bytes.
    pub attachment_size: u64,
    pub hour_of_day: u8,
    pub day_of_week: u8,
    pub sender_role: String,
    pub sender_tenure_days: u32,
    pub sender_status: String,
    /// Levenshtein-based similarity between the sender's name and the closest
    /// recipient address, in [0, 1]; proxy for self-addressed mail.
    pub name_address_similarity: f64,
    pub ground_truth: bool,
}

impl EmailRecord {
    /// Projection that strips the ground-truth flag. This is the only view
    /// featurization accepts.
    pub fn blinded(&self) -> BlindedRecord {
        BlindedRecord {
            id: self.id.clone(),
            sender_name: self.sender_name.clone(),
            sender_address: self.sender_address.clone(),
            recipient_addresses: self.recipient_addresses.clone(),
            recipient_count: self.recipient_count,
            subject_sensitive: self.subject_sensitive,
            attachment_sensitive: self.attachment_sensitive,
            attachment_count: self.attachment_count,
            attachment_size: self.attachment_size,
            hour_of_day: self.hour_of_day,
            day_of_week: self.day_of_week,
            sender_role: self.sender_role.clone(),
            sender_tenure_days: self.sender_tenure_days,
            sender_status: self.sender_status.clone(),
            name_address_similarity: self.name_address_similarity,
        }
    }
}

/// Annotator-visible view of an [`EmailRecord`]: same fields minus the
/// anomaly flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindedRecord {
    pub id: InstanceId,
    pub sender_name: String,
    pub sender_address: String,
    pub recipient_addresses: Vec<String>,
    pub recipient_count: u32,
    pub subject_sensitive: bool,
    pub attachment_sensitive: bool,
    pub attachment_count: u32,
    pub attachment_size: u64,
    pub hour_of_day: u8,
    pub day_of_week: u8,
    pub sender_role: String,
    pub sender_tenure_days: u32,
    pub sender_status: String,
    pub name_address_similarity: f64,
}

/// Numeric encoding of one record, in a fixed feature order shared per
/// corpus (the order and names live in the corpus's feature schema).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub id: InstanceId,
    pub values: Vec<f64>,
}

/// Predicted class distribution; probabilities sum to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidInput("empty class distribution".into()));
        }
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInput(
                "class probabilities must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "class probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(ClassDistribution(probabilities))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn class_count(&self) -> usize {
        self.0.len()
    }
}

/// One annotator's verdict on one instance: binary label plus integer
/// confidence on the 0..=10 scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceLabel {
    pub instance_id: InstanceId,
    pub annotator_id: AnnotatorId,
    /// 0 = not anomalous, 1 = anomalous.
    pub label: u8,
    /// Self-reported confidence, an integer in 0..=10.
    pub confidence: u8,
    /// Labeling round, starting at 1.
    pub round: u32,
}

impl ConfidenceLabel {
    pub fn validate(&self) -> Result<()> {
        if self.label > 1 {
            return Err(Error::InvalidInput(format!(
                "label must be 0 or 1, got {}",
                self.label
            )));
        }
        if self.confidence > 10 {
            return Err(Error::InvalidInput(format!(
                "confidence must lie in 0..=10, got {}",
                self.confidence
            )));
        }
        if self.round == 0 {
            return Err(Error::InvalidInput("round must be >= 1".into()));
        }
        Ok(())
    }
}

/// 11-way training target derived from a confidence label: pseudo-probability
/// of the instance being anomalous, scaled to an integer class 0..=10.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulticlassLabel {
    pub instance_id: InstanceId,
    pub pseudo_class: u8,
}

/// One round's queried instances, partitioned into high-risk, uncertainty
/// and random slots. The three lists are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBatch {
    pub round: u32,
    pub hrq_ids: Vec<InstanceId>,
    pub uq_ids: Vec<InstanceId>,
    pub rq_ids: Vec<InstanceId>,
}

impl QueryBatch {
    /// All queried ids in slot order (HRQ, then UQ, then RQ).
    pub fn all_ids(&self) -> impl Iterator<Item = &InstanceId> {
        self.hrq_ids
            .iter()
            .chain(self.uq_ids.iter())
            .chain(self.rq_ids.iter())
    }

    pub fn len(&self) -> usize {
        self.hrq_ids.len() + self.uq_ids.len() + self.rq_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-round record of queries, labels, transformed targets and the metrics
/// of the retrained models; the unit of all downstream statistics.
///
/// `labels` holds every per-annotator label collected in the round;
/// `resolved` holds exactly one label per queried instance after the team's
/// aggregation scheme (identical to `labels` for single-annotator schemes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: u32,
    pub batch: QueryBatch,
    pub labels: Vec<ConfidenceLabel>,
    pub resolved: Vec<ConfidenceLabel>,
    pub transformed: Vec<MulticlassLabel>,
    pub model_metrics: BTreeMap<String, f64>,
    /// Fraction of this round's HRQ instances whose resolved label is 1.
    pub hrq_true_rate: f64,
}

/// One invariant violation found by [`validate_corpus`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub id: InstanceId,
    pub message: String,
}

/// Result of corpus validation. An empty violation list means the corpus is
/// well-formed; callers decide whether to abort on violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub count: usize,
    pub anomaly_prevalence: f64,
    pub violations: Vec<Violation>,
}

/// Check every record-level invariant and cross-record id uniqueness.
pub fn validate_corpus(records: &[EmailRecord]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<&InstanceId, usize> = BTreeMap::new();
    let mut positives = 0usize;

    for record in records {
        if record.ground_truth {
            positives += 1;
        }
        *seen.entry(&record.id).or_insert(0) += 1;
        if record.recipient_count as usize != record.recipient_addresses.len() {
            violations.push(Violation {
                id: record.id.clone(),
                message: format!(
                    "recipient_count {} does not match {} recipient addresses",
                    record.recipient_count,
                    record.recipient_addresses.len()
                ),
            });
        }
        if !(0.0..=1.0).contains(&record.name_address_similarity) {
            violations.push(Violation {
                id: record.id.clone(),
                message: format!(
                    "name_address_similarity {} outside [0, 1]",
                    record.name_address_similarity
                ),
            });
        }
        if record.hour_of_day > 23 {
            violations.push(Violation {
                id: record.id.clone(),
                message: format!("hour_of_day {} outside 0..=23", record.hour_of_day),
            });
        }
        if record.day_of_week > 6 {
            violations.push(Violation {
                id: record.id.clone(),
                message: format!("day_of_week {} outside 0..=6", record.day_of_week),
            });
        }
    }
    for (id, n) in seen {
        if n > 1 {
            violations.push(Violation {
                id: id.clone(),
                message: format!("id appears {n} times"),
            });
        }
    }

    let prevalence = if records.is_empty() {
        0.0
    } else {
        positives as f64 / records.len() as f64
    };
    ValidationReport {
        count: records.len(),
        anomaly_prevalence: prevalence,
        violations,
    }
}
