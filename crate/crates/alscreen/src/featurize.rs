//! Record featurization: edit-distance similarity, the feature schema, and
//! the deterministic record → vector mapping.
//!
//! Featurization accepts only [`BlindedRecord`]s; the anomaly flag can never
//! reach a feature vector.

use serde::{Deserialize, Serialize};

use crate::data::{BlindedRecord, FeatureVector};
use crate::error::Result;
use crate::seed::fnv64;

/// Minimum number of single-character insertions, deletions and
/// substitutions transforming `a` into `b`. Operates on Unicode scalar
/// values; empty strings are allowed.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    // Single-row DP over b.
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let up = row[j + 1];
            let sub = diag + usize::from(ca != cb);
            row[j + 1] = sub.min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[b.len()]
}

/// Lowercase, drop everything from the first `@` on, and remove the
/// separator characters `.`, `_`, `-`.
fn normalize(s: &str) -> String {
    let local = s.split('@').next().unwrap_or("");
    local
        .chars()
        .filter(|c| !matches!(c, '.' | '_' | '-'))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Similarity in [0, 1] between a sender name and a recipient address,
/// used as a proxy for self-addressed mail:
/// `1 - levenshtein(normalize(name), normalize(address)) / max(len, len)`.
///
/// Returns 1.0 when both normalized strings are empty.
pub fn name_address_similarity(sender_name: &str, recipient_address: &str) -> f64 {
    let a = normalize(sender_name);
    let b = normalize(recipient_address);
    let denom = a.chars().count().max(b.chars().count());
    if denom == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / denom as f64
}

/// Ordered feature names plus the categorical vocabularies they encode.
/// All corpora processed by one experiment share a single schema; the
/// schema is emitted as a JSON sidecar so runs are auditable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub role_vocab: Vec<String>,
    pub status_vocab: Vec<String>,
}

const NUMERIC_FEATURES: [&str; 11] = [
    "subject_sensitive",
    "attachment_sensitive",
    "recipient_count_log1p",
    "attachment_count_log1p",
    "attachment_size_log1p",
    "sender_tenure_log1p",
    "name_address_similarity",
    "hour_sin",
    "hour_cos",
    "dow_sin",
    "dow_cos",
];

impl FeatureSchema {
    /// Build a schema from the categorical codes observed in a corpus.
    /// Vocabularies are sorted so the schema is independent of record order.
    pub fn from_corpus(records: &[BlindedRecord]) -> Self {
        let mut role_vocab: Vec<String> = records.iter().map(|r| r.sender_role.clone()).collect();
        role_vocab.sort();
        role_vocab.dedup();
        let mut status_vocab: Vec<String> =
            records.iter().map(|r| r.sender_status.clone()).collect();
        status_vocab.sort();
        status_vocab.dedup();
        Self::with_vocabs(role_vocab, status_vocab)
    }

    pub fn with_vocabs(role_vocab: Vec<String>, status_vocab: Vec<String>) -> Self {
        let mut feature_names: Vec<String> =
            NUMERIC_FEATURES.iter().map(|s| s.to_string()).collect();
        for role in &role_vocab {
            feature_names.push(format!("role={role}"));
        }
        feature_names.push("role=<other>".to_string());
        for status in &status_vocab {
            feature_names.push(format!("status={status}"));
        }
        feature_names.push("status=<other>".to_string());
        FeatureSchema {
            version: 1,
            feature_names,
            role_vocab,
            status_vocab,
        }
    }

    /// Number of features a vector under this schema carries.
    pub fn len(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_names.is_empty()
    }

    /// Stable 64-bit digest of the schema; models are stamped with it so
    /// schema mismatches are caught at predict time.
    pub fn digest(&self) -> u64 {
        let mut bytes = Vec::new();
        for name in &self.feature_names {
            bytes.extend_from_slice(name.as_bytes());
            bytes.push(0);
        }
        fnv64(&bytes)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

fn cyclic(value: f64, period: f64) -> (f64, f64) {
    let angle = 2.0 * std::f64::consts::PI * value / period;
    (angle.sin(), angle.cos())
}

/// Deterministic record → vector mapping: booleans to {0,1}, counts and
/// sizes log1p-scaled, hour/day cyclically encoded, categorical codes as
/// one-of-k indicator blocks with a reserved `<other>` slot for codes
/// outside the schema vocabulary.
pub fn featurize(record: &BlindedRecord, schema: &FeatureSchema) -> FeatureVector {
    let mut values = Vec::with_capacity(schema.len());
    values.push(f64::from(record.subject_sensitive));
    values.push(f64::from(record.attachment_sensitive));
    values.push(f64::from(record.recipient_count).ln_1p());
    values.push(f64::from(record.attachment_count).ln_1p());
    values.push((record.attachment_size as f64).ln_1p());
    values.push(f64::from(record.sender_tenure_days).ln_1p());
    values.push(record.name_address_similarity);
    let (hs, hc) = cyclic(f64::from(record.hour_of_day), 24.0);
    values.push(hs);
    values.push(hc);
    let (ds, dc) = cyclic(f64::from(record.day_of_week), 7.0);
    values.push(ds);
    values.push(dc);
    one_of_k(&mut values, &schema.role_vocab, &record.sender_role);
    one_of_k(&mut values, &schema.status_vocab, &record.sender_status);
    debug_assert_eq!(values.len(), schema.len());
    FeatureVector {
        id: record.id.clone(),
        values,
    }
}

fn one_of_k(values: &mut Vec<f64>, vocab: &[String], code: &str) {
    let mut matched = false;
    for entry in vocab {
        let hit = entry == code;
        matched |= hit;
        values.push(f64::from(hit));
    }
    values.push(f64::from(!matched));
}

/// Featurize a whole corpus under one schema.
pub fn featurize_corpus(records: &[BlindedRecord], schema: &FeatureSchema) -> Vec<FeatureVector> {
    records.iter().map(|r| featurize(r, schema)).collect()
}
