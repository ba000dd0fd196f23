//! The experiment orchestrator: runs the full multi-round active-learning
//! loop for every team scheme, retrains binary and multiclass models each
//! round, evaluates against a held-out corpus, and aggregates the analysis
//! battery across replicates.
//!
//! Replicates are independent (each derives its own corpus, partition and
//! annotator streams from the experiment seed); rounds within a replicate
//! are strictly sequential because each round's queries depend on the
//! previous round's model. The whole result is a pure function of the
//! config.

mod label_source;
pub mod report;

pub use label_source::{
    simulate_initializer, LabelSource, ReplayLabels, SimulatedAnnotators, INIT_MODEL_ID,
};

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::annotator::{AnnotatorProfile, TeamKind, TeamScheme};
use crate::data::{
    validate_corpus, BlindedRecord, ConfidenceLabel, EmailRecord, FeatureVector, InstanceId,
    RoundLog,
};
use crate::error::{Error, Result};
use crate::featurize::{featurize_corpus, FeatureSchema};
use crate::io::BatchRow;
use crate::labels::{to_pseudo_class, ReclassifyMode};
use crate::learner::{train, LearnerConfig, TrainedModel};
use crate::query::{compose_batch, BatchSizes, UncertaintyMeasure};
use crate::seed;
use crate::stats::{
    self, auprc, f_beta, jonckheere_terpstra, krippendorff_alpha, pearson_trend, AlphaMetric,
    JtResult, TrendAlternative,
};
use crate::synth::{generate_corpus, partition_rounds, CorpusIndex, GeneratorConfig};

/// Which label mode a model is trained in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Binary,
    Multiclass,
}

impl LabelMode {
    pub fn prefix(self) -> &'static str {
        match self {
            LabelMode::Binary => "binary",
            LabelMode::Multiclass => "multiclass",
        }
    }
}

fn default_version() -> u32 {
    1
}
fn default_n_rounds() -> u32 {
    8
}
fn default_init_size() -> usize {
    200
}
fn default_replicates() -> u32 {
    1
}
fn default_eval_size() -> usize {
    4000
}
fn default_reclassify() -> ReclassifyMode {
    ReclassifyMode::Midpoint
}
fn default_query_mode() -> LabelMode {
    LabelMode::Multiclass
}
fn default_measure() -> UncertaintyMeasure {
    UncertaintyMeasure::Margin
}
fn default_f_betas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_write_models() -> bool {
    true
}
fn default_binary_learner() -> LearnerConfig {
    LearnerConfig {
        class_count: 2,
        ..LearnerConfig::default()
    }
}
/// The 11-class model trains on confidence-graded targets whose class jitter
/// is pure noise; deep trees memorize it and generalize worse. Shallow,
/// slow-stepping trees with larger leaves are the robust default there.
fn default_multiclass_learner() -> LearnerConfig {
    LearnerConfig {
        class_count: 11,
        learning_rate: 0.05,
        max_depth: 2,
        min_samples_leaf: 10,
        ..LearnerConfig::default()
    }
}

/// Everything a run needs, loadable from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub seed: u64,
    #[serde(default = "default_n_rounds")]
    pub n_rounds: u32,
    #[serde(default = "default_init_size")]
    pub init_size: usize,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    /// Size of the separately generated held-out evaluation corpus.
    #[serde(default = "default_eval_size")]
    pub eval_size: usize,
    #[serde(default = "default_reclassify")]
    pub reclassify_mode: ReclassifyMode,
    /// Which label mode's model composes the query batches.
    #[serde(default = "default_query_mode")]
    pub query_mode: LabelMode,
    #[serde(default = "default_measure")]
    pub uncertainty_measure: UncertaintyMeasure,
    #[serde(default = "default_f_betas")]
    pub f_betas: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_write_models")]
    pub write_models: bool,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub batch_sizes: BatchSizes,
    #[serde(default = "default_binary_learner")]
    pub binary_learner: LearnerConfig,
    #[serde(default = "default_multiclass_learner")]
    pub multiclass_learner: LearnerConfig,
    pub annotators: Vec<AnnotatorProfile>,
    pub teams: Vec<TeamScheme>,
    /// High-skill annotator that synthesizes the initializer's confidences;
    /// a built-in default is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_annotator: Option<AnnotatorProfile>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&crate::io::read_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.binary_learner.validate()?;
        self.multiclass_learner.validate()?;
        if self.binary_learner.class_count != 2 {
            return Err(Error::Config(
                "binary learner must have class_count 2".into(),
            ));
        }
        if self.multiclass_learner.class_count != 11 {
            return Err(Error::Config(
                "multiclass learner must have class_count 11".into(),
            ));
        }
        if self.n_rounds == 0 || self.replicates == 0 {
            return Err(Error::Config(
                "n_rounds and replicates must be positive".into(),
            ));
        }
        if self.eval_size == 0 {
            return Err(Error::Config("eval_size must be positive".into()));
        }
        if self.f_betas.is_empty() || self.f_betas.iter().any(|b| *b <= 0.0) {
            return Err(Error::Config("f_betas must be positive".into()));
        }
        if self.init_size + self.n_rounds as usize > self.generator.n_records {
            return Err(Error::Config(format!(
                "init_size + n_rounds = {} exceeds corpus size {}",
                self.init_size + self.n_rounds as usize,
                self.generator.n_records
            )));
        }
        let pool_size = (self.generator.n_records - self.init_size) / self.n_rounds as usize;
        if self.batch_sizes.total() > pool_size {
            return Err(Error::Config(format!(
                "batch total {} exceeds per-round pool size {pool_size}",
                self.batch_sizes.total()
            )));
        }
        if self.teams.is_empty() {
            return Err(Error::Config("at least one team is required".into()));
        }
        let mut model_ids = Vec::new();
        for team in &self.teams {
            team.validate()?;
            if model_ids.contains(&&team.model_id) {
                return Err(Error::Config(format!(
                    "duplicate team model_id {}",
                    team.model_id
                )));
            }
            model_ids.push(&team.model_id);
            for id in &team.annotator_ids {
                if !self.annotators.iter().any(|p| &p.annotator_id == id) {
                    return Err(Error::Config(format!(
                        "team {} references unknown annotator {id}",
                        team.model_id
                    )));
                }
            }
        }
        for profile in &self.annotators {
            profile.validate()?;
        }
        if let Some(init) = &self.init_annotator {
            init.validate()?;
        }
        Ok(())
    }

    fn init_annotator_profile(&self) -> AnnotatorProfile {
        // Pre-labeled data stands in for a vetted hand-labeled set, so its
        // confidences are crisp: high skill, no reporting noise.
        self.init_annotator.clone().unwrap_or(AnnotatorProfile {
            annotator_id: "init-annotator".into(),
            skill: 0.97,
            confidence_bias: 0.0,
            confidence_noise_sd: 0.0,
            positive_label_caution: 0.0,
            motivation_decay: 0.0,
            skill_day_sd: 0.0,
            seed: seed::derive(self.seed, &[seed::tag("init-annotator")]),
        })
    }
}

/// Generated (or injected) per-replicate data: the working corpus with its
/// difficulty scores, and the held-out evaluation corpus.
pub struct ReplicateInputs {
    pub records: Vec<EmailRecord>,
    pub difficulties: Vec<crate::synth::DifficultyScore>,
    pub eval_records: Vec<EmailRecord>,
}

impl ReplicateInputs {
    pub fn generate(config: &ExperimentConfig, replicate: u32) -> Result<Self> {
        let corpus_config = GeneratorConfig {
            seed: seed::derive(
                config.seed,
                &[
                    seed::tag("corpus"),
                    config.generator.seed,
                    u64::from(replicate),
                ],
            ),
            ..config.generator.clone()
        };
        let (records, difficulties) = generate_corpus(&corpus_config)?;
        let eval_config = GeneratorConfig {
            seed: seed::derive(
                config.seed,
                &[
                    seed::tag("eval"),
                    config.generator.seed,
                    u64::from(replicate),
                ],
            ),
            n_records: config.eval_size,
            ..config.generator.clone()
        };
        let (eval_records, _) = generate_corpus(&eval_config)?;
        Ok(ReplicateInputs {
            records,
            difficulties,
            eval_records,
        })
    }
}

/// Per-round digests of the two retrained models, for change detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDigests {
    pub round: u32,
    pub binary: String,
    pub multiclass: String,
}

/// One team's trajectory through a replicate.
pub struct TeamRun {
    pub scheme: TeamScheme,
    /// Evaluation metrics of the initializer-only models, before any round;
    /// the baseline that round-1 improvement is measured against.
    pub initial_metrics: BTreeMap<String, f64>,
    pub rounds: Vec<RoundLog>,
    pub batch_rows: Vec<BatchRow>,
    pub model_digests: Vec<ModelDigests>,
    pub final_binary: TrainedModel,
    pub final_multiclass: TrainedModel,
}

pub struct ReplicateResult {
    pub replicate: u32,
    /// The pre-labeled initializer rows, recorded so a replay reproduces the
    /// run without consulting ground truth.
    pub initializer_labels: Vec<ConfidenceLabel>,
    pub teams: Vec<TeamRun>,
}

pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateResult>,
    pub analyses: Analyses,
}

/// Evaluate a model against a labeled split: average precision plus
/// precision/recall at anomaly-score threshold 0.5 and the configured
/// F-beta scores. Needs at least one positive in the split.
pub fn evaluate_round(
    model: &TrainedModel,
    schema: &FeatureSchema,
    eval_features: &[FeatureVector],
    eval_truth: &[bool],
    f_betas: &[f64],
) -> Result<BTreeMap<String, f64>> {
    if eval_features.is_empty() || !eval_truth.iter().any(|t| *t) {
        return Err(Error::Undefined(
            "evaluation split needs at least one positive".into(),
        ));
    }
    let scores = eval_features
        .iter()
        .map(|fv| model.anomaly_score(fv, schema))
        .collect::<Result<Vec<f64>>>()?;
    let mut metrics = BTreeMap::new();
    metrics.insert("auprc".to_string(), auprc(&scores, eval_truth)?);

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (score, truth) in scores.iter().zip(eval_truth) {
        let predicted = *score >= 0.5;
        match (predicted, truth) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = tp as f64 / (tp + fn_) as f64;
    metrics.insert("precision".to_string(), precision);
    metrics.insert("recall".to_string(), recall);
    for &beta in f_betas {
        metrics.insert(beta_key(beta), f_beta(precision, recall, beta));
    }
    Ok(metrics)
}

/// "f0.5", "f1", "f2" style metric keys.
pub fn beta_key(beta: f64) -> String {
    let text = format!("{beta}");
    format!("f{}", text.trim_end_matches(".0"))
}

struct TeamState {
    scheme: TeamScheme,
    binary: TrainedModel,
    multiclass: TrainedModel,
    features: Vec<FeatureVector>,
    binary_targets: Vec<usize>,
    multiclass_targets: Vec<usize>,
    rounds: Vec<RoundLog>,
    batch_rows: Vec<BatchRow>,
    digests: Vec<ModelDigests>,
}

/// Run one replicate against an arbitrary label source. Exposed so recorded
/// labels can be replayed (and so tests can poison inputs).
pub fn run_replicate(
    config: &ExperimentConfig,
    replicate: u32,
    inputs: &ReplicateInputs,
    source: &mut dyn LabelSource,
) -> Result<ReplicateResult> {
    let report = validate_corpus(&inputs.records);
    if let Some(violation) = report.violations.first() {
        return Err(Error::InvalidInput(format!(
            "corpus violation at {}: {}",
            violation.id, violation.message
        )));
    }

    let blinded: Vec<BlindedRecord> = inputs.records.iter().map(EmailRecord::blinded).collect();
    let schema = FeatureSchema::from_corpus(&blinded);
    let index = CorpusIndex::new(&inputs.records, &inputs.difficulties)?;
    let truth_map: BTreeMap<InstanceId, bool> = inputs
        .records
        .iter()
        .map(|r| (r.id.clone(), r.ground_truth))
        .collect();

    let (init_set, pools) = partition_rounds(
        &inputs.records,
        config.n_rounds as usize,
        config.init_size,
        seed::derive(config.seed, &[seed::tag("partition"), u64::from(replicate)]),
    )?;

    let eval_blinded: Vec<BlindedRecord> = inputs
        .eval_records
        .iter()
        .map(EmailRecord::blinded)
        .collect();
    let eval_features = featurize_corpus(&eval_blinded, &schema);
    let eval_truth: Vec<bool> = inputs.eval_records.iter().map(|r| r.ground_truth).collect();

    // Initializer: pre-labeled data from the label source (ground-truth
    // verdicts with synthesized confidences in simulation; recorded rows in
    // replay).
    let init_profile = config
        .init_annotator_profile()
        .reseeded(u64::from(replicate));
    let init_blinded: Vec<BlindedRecord> = init_set.iter().map(EmailRecord::blinded).collect();
    let init_features = featurize_corpus(&init_blinded, &schema);
    let initializer_labels = source.initializer(&init_profile, &init_set, &index)?;
    if initializer_labels.len() != init_set.len() {
        return Err(Error::InvalidInput(format!(
            "initializer produced {} labels for {} records",
            initializer_labels.len(),
            init_set.len()
        )));
    }
    let mut init_binary_targets = Vec::with_capacity(init_set.len());
    let mut init_multiclass_targets = Vec::with_capacity(init_set.len());
    for label in &initializer_labels {
        init_binary_targets.push(usize::from(label.label == 1));
        init_multiclass_targets.push(to_pseudo_class(label.label, label.confidence)? as usize);
    }

    // All teams start from the same initializer models.
    let initial_binary = train(
        &init_features,
        &init_binary_targets,
        &config.binary_learner,
        &schema,
    )?;
    let initial_multiclass = train(
        &init_features,
        &init_multiclass_targets,
        &config.multiclass_learner,
        &schema,
    )?;
    let mut initial_metrics = BTreeMap::new();
    for (mode, model) in [
        (LabelMode::Binary, &initial_binary),
        (LabelMode::Multiclass, &initial_multiclass),
    ] {
        let evaluated =
            evaluate_round(model, &schema, &eval_features, &eval_truth, &config.f_betas)?;
        for (key, value) in evaluated {
            initial_metrics.insert(format!("{}_{key}", mode.prefix()), value);
        }
    }

    let mut states: Vec<TeamState> = config
        .teams
        .iter()
        .map(|scheme| TeamState {
            scheme: scheme.clone(),
            binary: initial_binary.clone(),
            multiclass: initial_multiclass.clone(),
            features: init_features.clone(),
            binary_targets: init_binary_targets.clone(),
            multiclass_targets: init_multiclass_targets.clone(),
            rounds: Vec::new(),
            batch_rows: Vec::new(),
            digests: Vec::new(),
        })
        .collect();

    for round_index in 0..config.n_rounds {
        let round = round_index + 1;
        let pool_blinded: Vec<BlindedRecord> = pools[round_index as usize]
            .iter()
            .map(EmailRecord::blinded)
            .collect();
        let pool_features = featurize_corpus(&pool_blinded, &schema);
        let features_by_id: BTreeMap<&InstanceId, &FeatureVector> =
            pool_features.iter().map(|fv| (&fv.id, fv)).collect();

        for (team_index, state) in states.iter_mut().enumerate() {
            run_team_round(
                config,
                replicate,
                round,
                team_index,
                state,
                &pool_features,
                &features_by_id,
                &schema,
                &index,
                &truth_map,
                &eval_features,
                &eval_truth,
                source,
            )
            .map_err(|e| e.in_round(&state.scheme.model_id, round))?;
        }
    }

    // Conservation: initializer plus every batch, nothing lost, nothing
    // trained twice.
    for state in &states {
        let expected = config.init_size
            + state
                .rounds
                .iter()
                .map(|log| log.batch.len())
                .sum::<usize>();
        if state.features.len() != expected {
            return Err(Error::InvalidInput(format!(
                "team {}: cumulative training set has {} instances, expected {expected}",
                state.scheme.model_id,
                state.features.len()
            )));
        }
        let mut ids: Vec<&InstanceId> = state.features.iter().map(|fv| &fv.id).collect();
        ids.sort();
        let before = ids.len();
        ids.dedup();
        if ids.len() != before {
            return Err(Error::InvalidInput(format!(
                "team {}: instance trained on twice",
                state.scheme.model_id
            )));
        }
    }

    Ok(ReplicateResult {
        replicate,
        initializer_labels,
        teams: states
            .into_iter()
            .map(|state| TeamRun {
                scheme: state.scheme,
                initial_metrics: initial_metrics.clone(),
                rounds: state.rounds,
                batch_rows: state.batch_rows,
                model_digests: state.digests,
                final_binary: state.binary,
                final_multiclass: state.multiclass,
            })
            .collect(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_team_round(
    config: &ExperimentConfig,
    replicate: u32,
    round: u32,
    team_index: usize,
    state: &mut TeamState,
    pool_features: &[FeatureVector],
    features_by_id: &BTreeMap<&InstanceId, &FeatureVector>,
    schema: &FeatureSchema,
    index: &CorpusIndex<'_>,
    truth_map: &BTreeMap<InstanceId, bool>,
    eval_features: &[FeatureVector],
    eval_truth: &[bool],
    source: &mut dyn LabelSource,
) -> Result<()> {
    let driver = match config.query_mode {
        LabelMode::Binary => &state.binary,
        LabelMode::Multiclass => &state.multiclass,
    };
    let rq_seed = seed::derive(
        config.seed,
        &[
            seed::tag("rq"),
            u64::from(replicate),
            team_index as u64,
            u64::from(round),
        ],
    );
    let batch = compose_batch(
        round,
        pool_features,
        driver,
        schema,
        &config.batch_sizes,
        config.uncertainty_measure,
        rq_seed,
    )?;

    // Scores at selection time, for the batch file annotators answer.
    for (slot, ids) in [
        ("HRQ", &batch.hrq_ids),
        ("UQ", &batch.uq_ids),
        ("RQ", &batch.rq_ids),
    ] {
        for id in ids {
            let fv = features_by_id
                .get(id)
                .ok_or_else(|| Error::UnresolvedId(id.to_string()))?;
            let p = driver.predict_proba(fv, schema)?;
            state.batch_rows.push(BatchRow {
                round,
                slot: slot.to_string(),
                instance_id: id.0.clone(),
                anomaly_score: crate::learner::anomaly_score_of(&p),
                uncertainty: config.uncertainty_measure.of(&p)?,
            });
        }
    }

    let (raw, resolved) = source.answer(&state.scheme, &batch, index, round)?;
    let ground_truth = match config.reclassify_mode {
        ReclassifyMode::Midpoint => None,
        ReclassifyMode::Oracle => Some(truth_map),
    };
    let transformed =
        crate::labels::reclassify_targets(&resolved, config.reclassify_mode, ground_truth)?;

    for (label, multiclass) in resolved.iter().zip(&transformed) {
        let fv = features_by_id
            .get(&label.instance_id)
            .ok_or_else(|| Error::UnresolvedId(label.instance_id.to_string()))?;
        state.features.push((*fv).clone());
        state.binary_targets.push(usize::from(label.label == 1));
        state
            .multiclass_targets
            .push(multiclass.pseudo_class as usize);
    }

    state.binary = train(
        &state.features,
        &state.binary_targets,
        &config.binary_learner,
        schema,
    )?;
    state.multiclass = train(
        &state.features,
        &state.multiclass_targets,
        &config.multiclass_learner,
        schema,
    )?;

    let mut metrics = BTreeMap::new();
    for (mode, model) in [
        (LabelMode::Binary, &state.binary),
        (LabelMode::Multiclass, &state.multiclass),
    ] {
        let evaluated = evaluate_round(model, schema, eval_features, eval_truth, &config.f_betas)?;
        for (key, value) in evaluated {
            metrics.insert(format!("{}_{key}", mode.prefix()), value);
        }
    }
    let mean_confidence =
        raw.iter().map(|l| f64::from(l.confidence)).sum::<f64>() / raw.len().max(1) as f64;
    metrics.insert("mean_raw_confidence".to_string(), mean_confidence);

    let mut log = RoundLog {
        round,
        batch,
        labels: raw,
        resolved,
        transformed,
        model_metrics: metrics,
        hrq_true_rate: 0.0,
    };
    log.hrq_true_rate = stats::hrq_true_rate(&log)?;
    state.digests.push(ModelDigests {
        round,
        binary: format!("{:016x}", state.binary.digest()),
        multiclass: format!("{:016x}", state.multiclass.digest()),
    });
    state.rounds.push(log);
    Ok(())
}

/// Run the whole experiment with simulated annotators.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let mut replicates = Vec::with_capacity(config.replicates as usize);
    for replicate in 0..config.replicates {
        let inputs = ReplicateInputs::generate(config, replicate)?;
        let profiles: Vec<AnnotatorProfile> = config
            .annotators
            .iter()
            .map(|p| p.reseeded(u64::from(replicate)))
            .collect();
        let mut source = SimulatedAnnotators::new(profiles);
        replicates.push(run_replicate(config, replicate, &inputs, &mut source)?);
    }
    let analyses = analyze(config, &replicates);
    Ok(ExperimentResult {
        config: config.clone(),
        replicates,
        analyses,
    })
}

// ---------------------------------------------------------------------------
// Analyses
// ---------------------------------------------------------------------------

/// Lightweight per-replicate view consumed by the analysis pass; the
/// `metrics` subcommand reconstructs this from round-log files.
pub struct TeamRounds {
    pub scheme: TeamScheme,
    /// Baseline metrics of the initializer-only models.
    pub initial_metrics: BTreeMap<String, f64>,
    pub rounds: Vec<RoundLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceTrend {
    /// Pearson r between round-mean raw confidence and next-round change in
    /// the query-driving model's average precision, one entry per replicate
    /// (None where undefined).
    pub per_replicate_r: Vec<Option<f64>>,
    pub defined_count: usize,
    pub nonnegative_count: usize,
    pub mean_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamAnalysis {
    pub model_id: String,
    pub kind: TeamKind,
    /// Mode prefix -> per-round mean average precision across replicates.
    pub mean_auprc_by_round: BTreeMap<String, Vec<f64>>,
    /// Mode prefix -> final-round average precision per replicate.
    pub final_auprc_per_replicate: BTreeMap<String, Vec<f64>>,
    /// Replicates in which the final multiclass model's average precision is
    /// at or above the binary model's.
    pub multiclass_geq_binary_final: usize,
    /// This team's own HRQ agreement trend.
    pub hrq_rate: HrqRateAnalysis,
    pub confidence_trend: ConfidenceTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrqRateAnalysis {
    /// Per round: mean resolved HRQ true rate across teams and replicates.
    pub per_round_mean: Vec<f64>,
    /// [round][replicate] team-mean rates; the trend-test input.
    pub per_round_per_replicate: Vec<Vec<f64>>,
    pub jt_increasing: Option<JtResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaAnalysis {
    /// Per round: mean inter-rater alpha over group teams and replicates
    /// (interval metric on per-annotator pseudo-classes).
    pub per_round_mean: Vec<f64>,
    /// [round][replicate x group-team] defined alpha values.
    pub per_round_values: Vec<Vec<f64>>,
    /// Trend test on the per-round means, decreasing alternative.
    pub jt_decreasing_on_means: Option<JtResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotStat {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotConfidence {
    /// Raw confidence among 1-labels on high-risk queries.
    pub hrq_true: Option<SlotStat>,
    /// Raw confidence among 1-labels on uncertainty queries.
    pub uq_true: Option<SlotStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analyses {
    pub seed: u64,
    pub n_rounds: u32,
    pub replicates: u32,
    pub query_mode: LabelMode,
    pub teams: Vec<TeamAnalysis>,
    /// Replicates in which the team-mean final multiclass average precision
    /// is at or above the team-mean binary one (the run-level
    /// binary-vs-multiclass comparison).
    pub multiclass_geq_binary_final_runs: usize,
    pub hrq_rate: HrqRateAnalysis,
    pub group_alpha: Option<AlphaAnalysis>,
    pub slot_confidence: SlotConfidence,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn slot_stat(values: &[f64]) -> Option<SlotStat> {
    if values.is_empty() {
        return None;
    }
    let m = mean(values);
    let variance = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Some(SlotStat {
        n: values.len(),
        mean: m,
        sd: variance.sqrt(),
    })
}

/// Aggregate the analysis battery over replicate round logs.
pub fn analyze(config: &ExperimentConfig, replicates: &[ReplicateResult]) -> Analyses {
    let views: Vec<Vec<TeamRounds>> = replicates
        .iter()
        .map(|rep| {
            rep.teams
                .iter()
                .map(|team| TeamRounds {
                    scheme: team.scheme.clone(),
                    initial_metrics: team.initial_metrics.clone(),
                    rounds: team.rounds.clone(),
                })
                .collect()
        })
        .collect();
    analyze_rounds(config.seed, config.n_rounds, config.query_mode, &views)
}

/// Analysis over reconstructed round logs (used by both `run` and the
/// standalone `metrics` command).
pub fn analyze_rounds(
    seed_value: u64,
    n_rounds: u32,
    query_mode: LabelMode,
    replicates: &[Vec<TeamRounds>],
) -> Analyses {
    let n_reps = replicates.len();
    let team_count = replicates.first().map(|r| r.len()).unwrap_or(0);

    let mut teams = Vec::with_capacity(team_count);
    for team_index in 0..team_count {
        let scheme = &replicates[0][team_index].scheme;
        let mut mean_auprc_by_round: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut final_auprc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for mode in [LabelMode::Binary, LabelMode::Multiclass] {
            let key = format!("{}_auprc", mode.prefix());
            let mut per_round = vec![Vec::new(); n_rounds as usize];
            let mut finals = Vec::new();
            for rep in replicates {
                let rounds = &rep[team_index].rounds;
                for (i, log) in rounds.iter().enumerate() {
                    if let Some(v) = log.model_metrics.get(&key) {
                        per_round[i].push(*v);
                    }
                }
                if let Some(last) = rounds.last() {
                    if let Some(v) = last.model_metrics.get(&key) {
                        finals.push(*v);
                    }
                }
            }
            mean_auprc_by_round.insert(
                mode.prefix().to_string(),
                per_round.iter().map(|v| mean(v)).collect(),
            );
            final_auprc.insert(mode.prefix().to_string(), finals);
        }
        let multiclass_geq_binary_final = final_auprc["multiclass"]
            .iter()
            .zip(final_auprc["binary"].iter())
            .filter(|(m, b)| m >= b)
            .count();

        // Confidence vs improvement: round-r mean raw confidence against the
        // change the round's labels produced in the query-driving model,
        // i.e. the model entering round r+1 minus the model entering round r
        // (the initializer-only model before round 1).
        let driver_key = format!("{}_auprc", query_mode.prefix());
        let mut per_replicate_r = Vec::with_capacity(n_reps);
        for rep in replicates {
            let team = &rep[team_index];
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut entering = team.initial_metrics.get(&driver_key).copied();
            for log in &team.rounds {
                if let (Some(confidence), Some(before), Some(after)) = (
                    log.model_metrics.get("mean_raw_confidence"),
                    entering,
                    log.model_metrics.get(&driver_key),
                ) {
                    xs.push(*confidence);
                    ys.push(after - before);
                }
                entering = log.model_metrics.get(&driver_key).copied();
            }
            per_replicate_r.push(pearson_trend(&xs, &ys).ok().map(|p| p.r));
        }
        let defined: Vec<f64> = per_replicate_r.iter().filter_map(|r| *r).collect();
        let nonnegative_count = defined.iter().filter(|r| **r >= 0.0).count();
        teams.push(TeamAnalysis {
            model_id: scheme.model_id.clone(),
            kind: scheme.kind,
            mean_auprc_by_round,
            final_auprc_per_replicate: final_auprc,
            multiclass_geq_binary_final,
            hrq_rate: hrq_rate_analysis(replicates, n_rounds, Some(team_index)),
            confidence_trend: ConfidenceTrend {
                defined_count: defined.len(),
                nonnegative_count,
                mean_r: if defined.is_empty() {
                    None
                } else {
                    Some(mean(&defined))
                },
                per_replicate_r,
            },
        });
    }

    let hrq_rate = hrq_rate_analysis(replicates, n_rounds, None);

    // Run-level binary-vs-multiclass comparison: team-mean finals.
    let mut multiclass_geq_binary_final_runs = 0usize;
    for rep_index in 0..n_reps {
        let mut finals = BTreeMap::new();
        for mode in ["binary", "multiclass"] {
            let values: Vec<f64> = teams
                .iter()
                .filter_map(|t| t.final_auprc_per_replicate[mode].get(rep_index).copied())
                .collect();
            finals.insert(mode, mean(&values));
        }
        if finals["multiclass"] >= finals["binary"] {
            multiclass_geq_binary_final_runs += 1;
        }
    }

    // Group agreement: interval alpha over per-annotator pseudo-classes.
    let mut alpha_per_round: Vec<Vec<f64>> = vec![Vec::new(); n_rounds as usize];
    let mut any_group = false;
    for rep in replicates {
        for team in rep {
            if team.scheme.kind != TeamKind::Group {
                continue;
            }
            any_group = true;
            for (round_index, log) in team.rounds.iter().enumerate() {
                if let Some(alpha) = round_alpha(&team.scheme, log) {
                    alpha_per_round[round_index].push(alpha);
                }
            }
        }
    }
    let group_alpha = if any_group {
        let per_round_mean: Vec<f64> = alpha_per_round.iter().map(|v| mean(v)).collect();
        let jt = if per_round_mean.len() >= 2 && alpha_per_round.iter().all(|v| !v.is_empty()) {
            let groups: Vec<Vec<f64>> = per_round_mean.iter().map(|m| vec![*m]).collect();
            jonckheere_terpstra(&groups, TrendAlternative::Decreasing).ok()
        } else {
            None
        };
        Some(AlphaAnalysis {
            per_round_mean,
            per_round_values: alpha_per_round,
            jt_decreasing_on_means: jt,
        })
    } else {
        None
    };

    // Confidence by query slot, among 1-labels, pooled over everything.
    let mut hrq_confidences = Vec::new();
    let mut uq_confidences = Vec::new();
    for rep in replicates {
        for team in rep {
            for log in &team.rounds {
                for label in &log.labels {
                    if label.label != 1 {
                        continue;
                    }
                    if log.batch.hrq_ids.contains(&label.instance_id) {
                        hrq_confidences.push(f64::from(label.confidence));
                    } else if log.batch.uq_ids.contains(&label.instance_id) {
                        uq_confidences.push(f64::from(label.confidence));
                    }
                }
            }
        }
    }

    Analyses {
        seed: seed_value,
        n_rounds,
        replicates: n_reps as u32,
        query_mode,
        teams,
        multiclass_geq_binary_final_runs,
        hrq_rate,
        group_alpha,
        slot_confidence: SlotConfidence {
            hrq_true: slot_stat(&hrq_confidences),
            uq_true: slot_stat(&uq_confidences),
        },
    }
}

/// HRQ true-rate trend over rounds; one team when `team_index` is given,
/// otherwise the team-mean per replicate.
fn hrq_rate_analysis(
    replicates: &[Vec<TeamRounds>],
    n_rounds: u32,
    team_index: Option<usize>,
) -> HrqRateAnalysis {
    let n_reps = replicates.len();
    let mut per_round_per_replicate = vec![Vec::with_capacity(n_reps); n_rounds as usize];
    for rep in replicates {
        for (round_index, round_rates) in per_round_per_replicate.iter_mut().enumerate() {
            let rates: Vec<f64> = rep
                .iter()
                .enumerate()
                .filter(|(i, _)| team_index.map(|t| t == *i).unwrap_or(true))
                .filter_map(|(_, team)| team.rounds.get(round_index).map(|log| log.hrq_true_rate))
                .collect();
            if !rates.is_empty() {
                round_rates.push(mean(&rates));
            }
        }
    }
    let jt_increasing = if per_round_per_replicate.len() >= 2
        && per_round_per_replicate.iter().all(|v| !v.is_empty())
    {
        jonckheere_terpstra(&per_round_per_replicate, TrendAlternative::Increasing).ok()
    } else {
        None
    };
    HrqRateAnalysis {
        per_round_mean: per_round_per_replicate.iter().map(|v| mean(v)).collect(),
        per_round_per_replicate,
        jt_increasing,
    }
}

/// Inter-rater alpha for one group round: annotators x queried instances,
/// each cell the annotator's own pseudo-class for that instance.
fn round_alpha(scheme: &TeamScheme, log: &RoundLog) -> Option<f64> {
    let order: Vec<&InstanceId> = log.batch.all_ids().collect();
    let mut matrix: Vec<Vec<Option<f64>>> =
        vec![vec![None; order.len()]; scheme.annotator_ids.len()];
    for label in &log.labels {
        let Some(row) = scheme
            .annotator_ids
            .iter()
            .position(|id| id == &label.annotator_id)
        else {
            continue;
        };
        let Some(col) = order.iter().position(|id| **id == label.instance_id) else {
            continue;
        };
        let pseudo = to_pseudo_class(label.label, label.confidence).ok()?;
        matrix[row][col] = Some(f64::from(pseudo));
    }
    krippendorff_alpha(&matrix, AlphaMetric::Interval).ok()
}

/// Poison helper used by the blinding instrumentation: flip every
/// ground-truth flag in a corpus.
pub fn flip_ground_truth(records: &mut [EmailRecord]) {
    for record in records {
        record.ground_truth = !record.ground_truth;
    }
}

/// Raw per-annotator labels of a whole replicate as writeable rows,
/// including the initializer rows under [`label_source::INIT_MODEL_ID`].
pub fn replicate_label_rows(result: &ReplicateResult) -> Vec<crate::io::LabelRow> {
    let mut rows = Vec::new();
    for label in &result.initializer_labels {
        rows.push(crate::io::LabelRow::new(label_source::INIT_MODEL_ID, label));
    }
    for team in &result.teams {
        for log in &team.rounds {
            for label in &log.labels {
                rows.push(crate::io::LabelRow::new(&team.scheme.model_id, label));
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClassDistribution;

    pub(crate) fn tiny_config() -> ExperimentConfig {
        let annotators = vec![AnnotatorProfile {
            annotator_id: "a1".into(),
            skill: 0.9,
            confidence_bias: 0.0,
            confidence_noise_sd: 0.5,
            positive_label_caution: 0.0,
            motivation_decay: 0.0,
            skill_day_sd: 0.0,
            seed: 5,
        }];
        let teams = vec![TeamScheme {
            kind: TeamKind::Individual,
            annotator_ids: vec!["a1".into()],
            model_id: "B".into(),
            swap_round: None,
            group_threshold: None,
        }];
        ExperimentConfig {
            version: 1,
            seed: 42,
            n_rounds: 2,
            init_size: 60,
            replicates: 1,
            eval_size: 400,
            reclassify_mode: ReclassifyMode::Midpoint,
            query_mode: LabelMode::Multiclass,
            uncertainty_measure: UncertaintyMeasure::Margin,
            f_betas: vec![0.5, 1.0, 2.0],
            output_dir: PathBuf::from("out"),
            write_models: false,
            generator: GeneratorConfig {
                n_records: 500,
                anomaly_rate: 0.08,
                ..GeneratorConfig::default()
            },
            batch_sizes: BatchSizes::default(),
            binary_learner: LearnerConfig {
                n_boosting_rounds: 25,
                ..default_binary_learner()
            },
            multiclass_learner: LearnerConfig {
                n_boosting_rounds: 25,
                ..default_multiclass_learner()
            },
            annotators,
            teams,
            init_annotator: None,
        }
    }

    #[test]
    fn config_validation_catches_structural_errors() {
        let mut config = tiny_config();
        config.teams[0].annotator_ids = vec!["ghost".into()];
        assert!(config.validate().is_err());

        let mut config = tiny_config();
        config.batch_sizes = BatchSizes {
            hrq: 300,
            uq: 3,
            rq: 3,
        };
        assert!(config.validate().is_err());

        let mut config = tiny_config();
        config.binary_learner.class_count = 11;
        assert!(config.validate().is_err());

        assert!(tiny_config().validate().is_ok());
    }

    #[test]
    fn beta_keys_trim_trailing_zero() {
        assert_eq!(beta_key(0.5), "f0.5");
        assert_eq!(beta_key(1.0), "f1");
        assert_eq!(beta_key(2.0), "f2");
    }

    #[test]
    fn evaluate_round_on_degenerate_scorers() {
        use crate::data::InstanceId;
        // Model stub via a real but trivial model is heavyweight here; use
        // the score path directly through a uniform multiclass model.
        let config = tiny_config();
        let inputs = ReplicateInputs::generate(&config, 0).unwrap();
        let blinded: Vec<BlindedRecord> = inputs.records.iter().map(EmailRecord::blinded).collect();
        let schema = FeatureSchema::from_corpus(&blinded);
        let features = featurize_corpus(&blinded, &schema);
        let truth: Vec<bool> = inputs.records.iter().map(|r| r.ground_truth).collect();
        let prevalence = truth.iter().filter(|t| **t).count() as f64 / truth.len() as f64;

        // Uniform model: no boosting rounds at all.
        let mut model = train(
            &features,
            &truth.iter().map(|t| usize::from(*t)).collect::<Vec<_>>(),
            &config.binary_learner,
            &schema,
        )
        .unwrap();
        model.trees.clear();
        let metrics = evaluate_round(&model, &schema, &features, &truth, &[1.0]).unwrap();
        // Uniform scores tie everywhere; average precision equals prevalence.
        assert!((metrics["auprc"] - prevalence).abs() < 1e-12);
        assert_eq!(metrics["recall"], 1.0);
        assert!((metrics["precision"] - prevalence).abs() < 1e-12);

        let empty: Vec<FeatureVector> = Vec::new();
        assert!(evaluate_round(&model, &schema, &empty, &[], &[1.0]).is_err());
        let _ = InstanceId::from("x");
        let _ = ClassDistribution::new(vec![0.5, 0.5]).unwrap();
    }
}
