//! Simulated expert annotators and team labeling schemes.
//!
//! Each annotator owns skill, confidence calibration, bias and motivation
//! parameters. Accuracy follows `p_correct = 1 - difficulty * (1 - skill)`:
//! everyone is right on trivially easy records, and accuracy degrades toward
//! the annotator's skill as records get ambiguous. Confidence derives from
//! `p_correct` (a calibrated annotator) before bias, caution toward positive
//! labels, and noise distort it.
//!
//! Every label draw is seeded by (profile seed, instance id, round), so
//! batches can be answered concurrently per annotator and replayed exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{AnnotatorId, ConfidenceLabel, EmailRecord, QueryBatch};
use crate::error::{Error, Result};
use crate::labels::aggregate_by_instance;
use crate::seed;
use crate::synth::{CorpusIndex, DifficultyScore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub annotator_id: AnnotatorId,
    /// Labeling skill in [0, 1]; the accuracy floor on maximally hard
    /// records.
    pub skill: f64,
    /// Additive shift on the reported confidence, in confidence points.
    #[serde(default)]
    pub confidence_bias: f64,
    /// Standard deviation of gaussian confidence noise.
    #[serde(default)]
    pub confidence_noise_sd: f64,
    /// Confidence penalty applied when emitting a 1 (anomalous) label;
    /// models the observed asymmetry where positives are rated less
    /// confidently.
    #[serde(default)]
    pub positive_label_caution: f64,
    /// Per-round multiplicative skill decay in [0, 1].
    #[serde(default)]
    pub motivation_decay: f64,
    /// Day-to-day attention variation: standard deviation of a per-round
    /// gaussian offset on effective skill. The same offset applies to every
    /// instance labeled that round, so good and bad days exist.
    #[serde(default)]
    pub skill_day_sd: f64,
    pub seed: u64,
}

impl AnnotatorProfile {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.skill) {
            return Err(Error::Config(format!(
                "annotator {}: skill {} outside [0, 1]",
                self.annotator_id, self.skill
            )));
        }
        if self.confidence_noise_sd < 0.0
            || self.positive_label_caution < 0.0
            || self.skill_day_sd < 0.0
        {
            return Err(Error::Config(format!(
                "annotator {}: noise, caution and day variation must be non-negative",
                self.annotator_id
            )));
        }
        if !(0.0..=1.0).contains(&self.motivation_decay) {
            return Err(Error::Config(format!(
                "annotator {}: motivation_decay {} outside [0, 1]",
                self.annotator_id, self.motivation_decay
            )));
        }
        Ok(())
    }

    /// Re-seed this profile for an independent replicate.
    pub fn reseeded(&self, replicate: u64) -> Self {
        AnnotatorProfile {
            seed: seed::derive(self.seed, &[seed::tag("replicate"), replicate]),
            ..self.clone()
        }
    }
}

/// How a team feeds one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeamKind {
    /// One annotator labels every round.
    Individual,
    /// Two annotators; the second takes over from `swap_round` on.
    Swap,
    /// Every team member labels every instance; votes aggregate by
    /// threshold.
    Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamScheme {
    pub kind: TeamKind,
    pub annotator_ids: Vec<AnnotatorId>,
    /// Identifier of the model this team trains.
    pub model_id: String,
    /// First round at which a swap team's second annotator takes over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_round: Option<u32>,
    /// Votes needed for a group 1-label; defaults to 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_threshold: Option<usize>,
}

impl TeamScheme {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            TeamKind::Individual => {
                if self.annotator_ids.len() != 1 {
                    return Err(Error::Config(format!(
                        "individual team {} needs exactly one annotator",
                        self.model_id
                    )));
                }
            }
            TeamKind::Swap => {
                if self.annotator_ids.len() != 2 {
                    return Err(Error::Config(format!(
                        "swap team {} needs exactly two annotators",
                        self.model_id
                    )));
                }
                if self.swap_round.is_none() {
                    return Err(Error::Config(format!(
                        "swap team {} needs swap_round",
                        self.model_id
                    )));
                }
            }
            TeamKind::Group => {
                if self.annotator_ids.len() < 2 {
                    return Err(Error::Config(format!(
                        "group team {} needs at least two annotators",
                        self.model_id
                    )));
                }
                let threshold = self.group_threshold.unwrap_or(2);
                if threshold == 0 || threshold > self.annotator_ids.len() {
                    return Err(Error::Config(format!(
                        "group team {}: threshold {} outside 1..={}",
                        self.model_id,
                        threshold,
                        self.annotator_ids.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Annotators active in the given round.
    pub fn active_annotators(&self, round: u32) -> Vec<&AnnotatorId> {
        match self.kind {
            TeamKind::Individual => vec![&self.annotator_ids[0]],
            TeamKind::Swap => {
                let swap_at = self.swap_round.unwrap_or(u32::MAX);
                if round < swap_at {
                    vec![&self.annotator_ids[0]]
                } else {
                    vec![&self.annotator_ids[1]]
                }
            }
            TeamKind::Group => self.annotator_ids.iter().collect(),
        }
    }
}

/// One simulated labeling decision.
///
/// Effective skill decays as `skill * (1 - motivation_decay)^(round-1)`.
/// With `p = 1 - difficulty * (1 - effective_skill)`, floored at 0.5 so
/// nobody is anti-informative (a fully unskilled annotator on an impossible
/// record flips a fair coin), the emitted label matches ground truth with
/// probability `p`, and the raw confidence is `10 * (2p - 1)` clipped to
/// [0, 10] before bias, caution and noise.
pub fn simulate_label(
    profile: &AnnotatorProfile,
    record: &EmailRecord,
    difficulty: &DifficultyScore,
    round: u32,
) -> ConfidenceLabel {
    debug_assert_eq!(
        difficulty.instance_id, record.id,
        "difficulty score must match the record"
    );
    let draw_seed = seed::derive(profile.seed, &[seed::tag(&record.id.0), u64::from(round)]);
    let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);

    let day_offset = if profile.skill_day_sd > 0.0 {
        // One draw per (annotator, round): the whole day shares it.
        let mut day_rng = ChaCha8Rng::seed_from_u64(seed::derive(
            profile.seed,
            &[seed::tag("day"), u64::from(round)],
        ));
        Normal::new(0.0, profile.skill_day_sd)
            .expect("validated sd")
            .sample(&mut day_rng)
    } else {
        0.0
    };
    let effective_skill = (profile.skill
        * (1.0 - profile.motivation_decay).powi(round.saturating_sub(1) as i32)
        + day_offset)
        .clamp(0.0, 1.0);
    let p_correct = (1.0 - difficulty.difficulty * (1.0 - effective_skill)).max(0.5);
    let correct = rng.random::<f64>() < p_correct;
    let label = u8::from(record.ground_truth == correct);

    let raw_confidence = (10.0 * (2.0 * p_correct - 1.0)).clamp(0.0, 10.0);
    let noise = if profile.confidence_noise_sd > 0.0 {
        Normal::new(0.0, profile.confidence_noise_sd)
            .expect("validated sd")
            .sample(&mut rng)
    } else {
        0.0
    };
    let caution = if label == 1 {
        profile.positive_label_caution
    } else {
        0.0
    };
    let shifted = raw_confidence + profile.confidence_bias - caution + noise;
    let confidence = (shifted.clamp(0.0, 10.0) + 0.5).floor() as i64;

    ConfidenceLabel {
        instance_id: record.id.clone(),
        annotator_id: profile.annotator_id.clone(),
        label,
        confidence: confidence.clamp(0, 10) as u8,
        round,
    }
}

/// Resolved-label annotator id for aggregated group output.
pub fn group_annotator_id(model_id: &str) -> AnnotatorId {
    AnnotatorId(format!("group:{model_id}"))
}

/// Answer one round's batch under a team scheme. Returns every raw
/// per-annotator label plus one resolved label per queried instance (raw and
/// resolved coincide for single-annotator schemes).
pub fn answer_batch(
    scheme: &TeamScheme,
    profiles: &[AnnotatorProfile],
    batch: &QueryBatch,
    corpus: &CorpusIndex<'_>,
    round: u32,
) -> Result<(Vec<ConfidenceLabel>, Vec<ConfidenceLabel>)> {
    scheme.validate()?;
    let find_profile = |id: &AnnotatorId| -> Result<&AnnotatorProfile> {
        profiles
            .iter()
            .find(|p| &p.annotator_id == id)
            .ok_or_else(|| Error::Config(format!("no profile for annotator {id}")))
    };

    let active = scheme.active_annotators(round);
    let mut raw = Vec::with_capacity(active.len() * batch.len());
    for id in batch.all_ids() {
        let (record, difficulty) = corpus.get(id)?;
        for annotator in &active {
            let profile = find_profile(annotator)?;
            raw.push(simulate_label(profile, record, difficulty, round));
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
                &group_annotator_id(&scheme.model_id),
                round,
            )?
        }
    };
    Ok((raw, resolved))
}
