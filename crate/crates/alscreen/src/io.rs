//! File formats: corpus and label CSVs, batch and round-log CSVs, and the
//! JSON sidecars. Column orders are fixed; see the README for the full
//! schemas.
//!
//! Record CSVs come in two flavors: the evaluation copy carries a
//! `ground_truth` column, the blinded copy does not. Recipient address lists
//! are semicolon-joined inside a single CSV field.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ConfidenceLabel, EmailRecord, InstanceId, MulticlassLabel, QueryBatch};
use crate::error::{Error, Result};
use crate::synth::DifficultyScore;

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    id: String,
    sender_name: String,
    sender_address: String,
    recipient_addresses: String,
    recipient_count: u32,
    subject_sensitive: bool,
    attachment_sensitive: bool,
    attachment_count: u32,
    attachment_size: u64,
    hour_of_day: u8,
    day_of_week: u8,
    sender_role: String,
    sender_tenure_days: u32,
    sender_status: String,
    name_address_similarity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_truth: Option<bool>,
}

impl RecordRow {
    fn from_record(record: &EmailRecord, include_ground_truth: bool) -> Self {
        RecordRow {
            id: record.id.0.clone(),
            sender_name: record.sender_name.clone(),
            sender_address: record.sender_address.clone(),
            recipient_addresses: record.recipient_addresses.join(";"),
            recipient_count: record.recipient_count,
            subject_sensitive: record.subject_sensitive,
            attachment_sensitive: record.attachment_sensitive,
            attachment_count: record.attachment_count,
            attachment_size: record.attachment_size,
            hour_of_day: record.hour_of_day,
            day_of_week: record.day_of_week,
            sender_role: record.sender_role.clone(),
            sender_tenure_days: record.sender_tenure_days,
            sender_status: record.sender_status.clone(),
            name_address_similarity: record.name_address_similarity,
            ground_truth: include_ground_truth.then_some(record.ground_truth),
        }
    }

    fn into_record(self) -> EmailRecord {
        EmailRecord {
            id: InstanceId(self.id),
            sender_name: self.sender_name,
            sender_address: self.sender_address,
            recipient_addresses: if self.recipient_addresses.is_empty() {
                Vec::new()
            } else {
                self.recipient_addresses
                    .split(';')
                    .map(str::to_string)
                    .collect()
            },
            recipient_count: self.recipient_count,
            subject_sensitive: self.subject_sensitive,
            attachment_sensitive: self.attachment_sensitive,
            attachment_count: self.attachment_count,
            attachment_size: self.attachment_size,
            hour_of_day: self.hour_of_day,
            day_of_week: self.day_of_week,
            sender_role: self.sender_role,
            sender_tenure_days: self.sender_tenure_days,
            sender_status: self.sender_status,
            name_address_similarity: self.name_address_similarity,
            ground_truth: self.ground_truth.unwrap_or(false),
        }
    }
}

/// Write a corpus; the evaluation copy includes the `ground_truth` column,
/// the blinded copy omits it entirely.
pub fn write_records_csv(
    path: &Path,
    records: &[EmailRecord],
    include_ground_truth: bool,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for record in records {
        writer.serialize(RecordRow::from_record(record, include_ground_truth))?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a corpus CSV. Rows without a `ground_truth` column load with the
/// flag false; `has_ground_truth` reports which flavor the file was.
pub fn read_records_csv(path: &Path) -> Result<(Vec<EmailRecord>, bool)> {
    let mut reader = csv::Reader::from_path(path)?;
    let has_ground_truth = reader.headers()?.iter().any(|h| h == "ground_truth");
    let mut records = Vec::new();
    for row in reader.deserialize::<RecordRow>() {
        records.push(row?.into_record());
    }
    Ok((records, has_ground_truth))
}

#[derive(Debug, Serialize, Deserialize)]
struct DifficultyRow {
    instance_id: String,
    difficulty: f64,
}

pub fn write_difficulties_csv(path: &Path, difficulties: &[DifficultyScore]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for d in difficulties {
        writer.serialize(DifficultyRow {
            instance_id: d.instance_id.0.clone(),
            difficulty: d.difficulty,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_difficulties_csv(path: &Path) -> Result<Vec<DifficultyScore>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<DifficultyRow>() {
        let row = row?;
        out.push(DifficultyScore {
            instance_id: InstanceId(row.instance_id),
            difficulty: row.difficulty,
        });
    }
    Ok(out)
}

/// One confidence label bound to the model (team) it was produced for; the
/// row format shared by raw and resolved label files, and the format the
/// replay path consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub model_id: String,
    pub round: u32,
    pub annotator_id: String,
    pub instance_id: String,
    pub label: u8,
    pub confidence: u8,
}

impl LabelRow {
    pub fn new(model_id: &str, label: &ConfidenceLabel) -> Self {
        LabelRow {
            model_id: model_id.to_string(),
            round: label.round,
            annotator_id: label.annotator_id.0.clone(),
            instance_id: label.instance_id.0.clone(),
            label: label.label,
            confidence: label.confidence,
        }
    }

    pub fn into_label(self) -> ConfidenceLabel {
        ConfidenceLabel {
            instance_id: InstanceId(self.instance_id),
            annotator_id: crate::data::AnnotatorId(self.annotator_id),
            label: self.label,
            confidence: self.confidence,
            round: self.round,
        }
    }
}

pub fn write_labels_csv(path: &Path, rows: &[LabelRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<LabelRow>() {
        let row = row?;
        row.clone().into_label().validate()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Batch CSV row: the file an annotator (real or simulated) answers.
#[derive(Debug, Serialize, Deserialize)]
pub struct BatchRow {
    pub round: u32,
    /// HRQ, UQ or RQ.
    pub slot: String,
    pub instance_id: String,
    pub anomaly_score: f64,
    pub uncertainty: f64,
}

pub fn write_batches_csv(path: &Path, rows: &[BatchRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_batches_csv(path: &Path) -> Result<Vec<BatchRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<BatchRow>() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Reassemble per-round query batches from batch rows.
pub fn batches_from_rows(rows: &[BatchRow]) -> Result<Vec<QueryBatch>> {
    let mut by_round: BTreeMap<u32, QueryBatch> = BTreeMap::new();
    for row in rows {
        let batch = by_round.entry(row.round).or_insert_with(|| QueryBatch {
            round: row.round,
            hrq_ids: Vec::new(),
            uq_ids: Vec::new(),
            rq_ids: Vec::new(),
        });
        let id = InstanceId(row.instance_id.clone());
        match row.slot.as_str() {
            "HRQ" => batch.hrq_ids.push(id),
            "UQ" => batch.uq_ids.push(id),
            "RQ" => batch.rq_ids.push(id),
            other => return Err(Error::InvalidInput(format!("unknown batch slot {other:?}"))),
        }
    }
    Ok(by_round.into_values().collect())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TransformedRow {
    pub round: u32,
    pub instance_id: String,
    pub pseudo_class: u8,
}

pub fn write_transformed_csv(path: &Path, rows: &[(u32, &MulticlassLabel)]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for (round, label) in rows {
        writer.serialize(TransformedRow {
            round: *round,
            instance_id: label.instance_id.0.clone(),
            pseudo_class: label.pseudo_class,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_transformed_csv(path: &Path) -> Result<Vec<TransformedRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<TransformedRow>() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Per-round scalar summary written alongside the logs; metric names map to
/// columns dynamically so both label modes share one file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundSummaryRow {
    pub round: u32,
    pub hrq_count: usize,
    pub uq_count: usize,
    pub rq_count: usize,
    pub hrq_true_rate: f64,
    pub metrics: BTreeMap<String, f64>,
}

pub fn write_round_summary_csv(path: &Path, rows: &[RoundSummaryRow]) -> Result<()> {
    let mut metric_names: Vec<String> = rows
        .iter()
        .flat_map(|r| r.metrics.keys().cloned())
        .collect();
    metric_names.sort();
    metric_names.dedup();
    let mut writer = csv::WriterBuilder::new().from_path(path)?;
    let mut header = vec![
        "round".to_string(),
        "hrq_count".to_string(),
        "uq_count".to_string(),
        "rq_count".to_string(),
        "hrq_true_rate".to_string(),
    ];
    header.extend(metric_names.iter().cloned());
    writer.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            row.round.to_string(),
            row.hrq_count.to_string(),
            row.uq_count.to_string(),
            row.rq_count.to_string(),
            format_float(row.hrq_true_rate),
        ];
        for name in &metric_names {
            record.push(
                row.metrics
                    .get(name)
                    .map(|v| format_float(*v))
                    .unwrap_or_default(),
            );
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_round_summary_csv(path: &Path) -> Result<Vec<RoundSummaryRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |name: &str| -> Result<&str> {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| record.get(i))
                .ok_or_else(|| Error::InvalidInput(format!("missing column {name}")))
        };
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::InvalidInput(format!("bad integer {s:?}: {e}")))
        };
        let mut metrics = BTreeMap::new();
        for (i, header) in headers.iter().enumerate() {
            if matches!(
                header.as_str(),
                "round" | "hrq_count" | "uq_count" | "rq_count" | "hrq_true_rate"
            ) {
                continue;
            }
            if let Some(value) = record.get(i) {
                if !value.is_empty() {
                    metrics.insert(
                        header.clone(),
                        value.parse::<f64>().map_err(|e| {
                            Error::InvalidInput(format!("bad float {value:?}: {e}"))
                        })?,
                    );
                }
            }
        }
        rows.push(RoundSummaryRow {
            round: get("round")?
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad round: {e}")))?,
            hrq_count: parse_usize(get("hrq_count")?)?,
            uq_count: parse_usize(get("uq_count")?)?,
            rq_count: parse_usize(get("rq_count")?)?,
            hrq_true_rate: get("hrq_true_rate")?
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad rate: {e}")))?,
            metrics,
        });
    }
    Ok(rows)
}

/// Deterministic float formatting for CSV output: enough digits to
/// round-trip f64 exactly.
pub fn format_float(value: f64) -> String {
    let mut buffer = ryu_like(value);
    if !buffer.contains('.') && !buffer.contains('e') && !buffer.contains("inf") {
        buffer.push_str(".0");
    }
    buffer
}

fn ryu_like(value: f64) -> String {
    // {:?} on f64 prints the shortest representation that round-trips.
    format!("{value:?}")
}

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

pub fn read_string(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}
