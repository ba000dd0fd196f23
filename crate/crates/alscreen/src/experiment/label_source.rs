//! Where labels come from: the simulator, or recorded label files replayed
//! through the same loop (the integration point for real analyst labels).

use std::collections::BTreeMap;

use crate::annotator::{answer_batch, simulate_label, AnnotatorProfile, TeamKind, TeamScheme};
use crate::data::{AnnotatorId, ConfidenceLabel, EmailRecord, InstanceId, QueryBatch};
use crate::error::{Error, Result};
use crate::io::LabelRow;
use crate::labels::aggregate_by_instance;
use crate::synth::CorpusIndex;

/// Pseudo model id under which initializer labels are filed in label CSVs.
pub const INIT_MODEL_ID: &str = "init";

/// Supplies the pre-labeled initializer and one round of labels per team.
/// Implementations must return the raw per-annotator labels plus one
/// resolved label per queried instance.
pub trait LabelSource {
    /// Labels for the pre-labeled initializer set: the verdict plus a
    /// confidence per record, filed as round 1 under [`INIT_MODEL_ID`].
    fn initializer(
        &mut self,
        init_profile: &AnnotatorProfile,
        init_set: &[EmailRecord],
        corpus: &CorpusIndex<'_>,
    ) -> Result<Vec<ConfidenceLabel>>;

    fn answer(
        &mut self,
        scheme: &TeamScheme,
        batch: &QueryBatch,
        corpus: &CorpusIndex<'_>,
        round: u32,
    ) -> Result<(Vec<ConfidenceLabel>, Vec<ConfidenceLabel>)>;
}

/// Ground-truth verdicts with confidences synthesized by the designated
/// high-skill annotator; the built-in way to produce initializer labels.
pub fn simulate_initializer(
    init_profile: &AnnotatorProfile,
    init_set: &[EmailRecord],
    corpus: &CorpusIndex<'_>,
) -> Result<Vec<ConfidenceLabel>> {
    init_set
        .iter()
        .map(|record| {
            let (full, difficulty) = corpus.get(&record.id)?;
            let simulated = simulate_label(init_profile, full, difficulty, 1);
            Ok(ConfidenceLabel {
                instance_id: record.id.clone(),
                annotator_id: init_profile.annotator_id.clone(),
                label: u8::from(record.ground_truth),
                confidence: simulated.confidence,
                round: 1,
            })
        })
        .collect()
}

/// Simulated annotator teams; profiles are already re-seeded per replicate.
pub struct SimulatedAnnotators {
    profiles: Vec<AnnotatorProfile>,
}

impl SimulatedAnnotators {
    pub fn new(profiles: Vec<AnnotatorProfile>) -> Self {
        SimulatedAnnotators { profiles }
    }
}

impl LabelSource for SimulatedAnnotators {
    fn initializer(
        &mut self,
        init_profile: &AnnotatorProfile,
        init_set: &[EmailRecord],
        corpus: &CorpusIndex<'_>,
    ) -> Result<Vec<ConfidenceLabel>> {
        simulate_initializer(init_profile, init_set, corpus)
    }

    fn answer(
        &mut self,
        scheme: &TeamScheme,
        batch: &QueryBatch,
        corpus: &CorpusIndex<'_>,
        round: u32,
    ) -> Result<(Vec<ConfidenceLabel>, Vec<ConfidenceLabel>)> {
        answer_batch(scheme, &self.profiles, batch, corpus, round)
    }
}

/// Replays labels recorded in a raw-label file. The loop is deterministic,
/// so the batches the replay composes match the ones the labels were
/// recorded against; any queried instance missing from the file is an error.
pub struct ReplayLabels {
    by_key: BTreeMap<(String, u32, AnnotatorId, InstanceId), (u8, u8)>,
}

impl ReplayLabels {
    pub fn from_rows(rows: &[LabelRow]) -> Self {
        let by_key = rows
            .iter()
            .map(|row| {
                (
                    (
                        row.model_id.clone(),
                        row.round,
                        AnnotatorId(row.annotator_id.clone()),
                        InstanceId(row.instance_id.clone()),
                    ),
                    (row.label, row.confidence),
                )
            })
            .collect();
        ReplayLabels { by_key }
    }
}

impl LabelSource for ReplayLabels {
    fn initializer(
        &mut self,
        init_profile: &AnnotatorProfile,
        init_set: &[EmailRecord],
        corpus: &CorpusIndex<'_>,
    ) -> Result<Vec<ConfidenceLabel>> {
        let has_init_rows = self
            .by_key
            .keys()
            .any(|(model, _, _, _)| model == INIT_MODEL_ID);
        if !has_init_rows {
            // Older label files carry no initializer rows; fall back to the
            // built-in pre-labeling.
            return simulate_initializer(init_profile, init_set, corpus);
        }
        init_set
            .iter()
            .map(|record| {
                let key = (
                    INIT_MODEL_ID.to_string(),
                    1,
                    init_profile.annotator_id.clone(),
                    record.id.clone(),
                );
                let (label, confidence) = self.by_key.get(&key).ok_or_else(|| {
                    Error::UnresolvedId(format!("no recorded initializer label for {}", record.id))
                })?;
                Ok(ConfidenceLabel {
                    instance_id: record.id.clone(),
                    annotator_id: init_profile.annotator_id.clone(),
                    label: *label,
                    confidence: *confidence,
                    round: 1,
                })
            })
            .collect()
    }

    fn answer(
        &mut self,
        scheme: &TeamScheme,
        batch: &QueryBatch,
        _corpus: &CorpusIndex<'_>,
        round: u32,
    ) -> Result<(Vec<ConfidenceLabel>, Vec<ConfidenceLabel>)> {
        scheme.validate()?;
        let active = scheme.active_annotators(round);
        let mut raw = Vec::with_capacity(active.len() * batch.len());
        for id in batch.all_ids() {
            for annotator in &active {
                let key = (
                    scheme.model_id.clone(),
                    round,
                    (*annotator).clone(),
                    id.clone(),
                );
                let (label, confidence) = self.by_key.get(&key).ok_or_else(|| {
                    Error::UnresolvedId(format!(
                        "no recorded label for model {} round {round} annotator {annotator} instance {id}",
                        scheme.model_id
                    ))
                })?;
                raw.push(ConfidenceLabel {
                    instance_id: id.clone(),
                    annotator_id: (*annotator).clone(),
                    label: *label,
                    confidence: *confidence,
                    round,
                });
            }
        }
        let resolved = match scheme.kind {
            TeamKind::Individual | TeamKind::Swap => raw.clone(),
            TeamKind::Group => {
                let order: Vec<_> = batch.all_ids().cloned().collect();
                aggregate_by_instance(
                    &raw,
                    &order,
                    scheme.group_threshold.unwrap_or(2),
                    &crate::annotator::group_annotator_id(&scheme.model_id),
                    round,
                )?
            }
        };
        Ok((raw, resolved))
    }
}
