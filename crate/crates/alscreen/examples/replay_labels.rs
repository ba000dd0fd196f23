//! Label replay: record one replicate's raw labels, then re-run the loop
//! consuming them from the file format a human labeling session would
//! produce. The loop is deterministic, so the replay composes the same
//! batches and reproduces the run exactly — this is the integration point
//! for real analyst labels.
//!
//! Run with: `cargo run --example replay_labels`

use alscreen::annotator::{AnnotatorProfile, TeamKind, TeamScheme};
use alscreen::experiment::{
    replicate_label_rows, run_replicate, ExperimentConfig, LabelMode, ReplayLabels,
    ReplicateInputs, SimulatedAnnotators,
};
use alscreen::labels::ReclassifyMode;
use alscreen::learner::LearnerConfig;
use alscreen::query::{BatchSizes, UncertaintyMeasure};
use alscreen::synth::GeneratorConfig;

fn main() -> alscreen::Result<()> {
    let annotators = vec![AnnotatorProfile {
        annotator_id: "a1".into(),
        skill: 0.85,
        confidence_bias: 0.0,
        confidence_noise_sd: 1.0,
        positive_label_caution: 0.0,
        motivation_decay: 0.0,
        skill_day_sd: 0.0,
        seed: 9,
    }];
    let config = ExperimentConfig {
        version: 1,
        seed: 77,
        n_rounds: 3,
        init_size: 80,
        replicates: 1,
        eval_size: 500,
        reclassify_mode: ReclassifyMode::Midpoint,
        query_mode: LabelMode::Multiclass,
        uncertainty_measure: UncertaintyMeasure::Margin,
        f_betas: vec![1.0],
        output_dir: std::env::temp_dir().join("alscreen-replay-demo"),
        write_models: false,
        generator: GeneratorConfig {
            n_records: 900,
            anomaly_rate: 0.08,
            ..GeneratorConfig::default()
        },
        batch_sizes: BatchSizes::default(),
        binary_learner: LearnerConfig {
            n_boosting_rounds: 30,
            class_count: 2,
            ..LearnerConfig::default()
        },
        multiclass_learner: LearnerConfig {
            n_boosting_rounds: 30,
            learning_rate: 0.05,
            max_depth: 2,
            min_samples_leaf: 10,
            class_count: 11,
            ..LearnerConfig::default()
        },
        teams: vec![TeamScheme {
            kind: TeamKind::Individual,
            annotator_ids: vec!["a1".into()],
            model_id: "B".into(),
            swap_round: None,
            group_threshold: None,
        }],
        annotators,
        init_annotator: None,
    };

    // Pass 1: simulate and record every raw label (including the
    // initializer rows).
    let inputs = ReplicateInputs::generate(&config, 0)?;
    let profiles: Vec<AnnotatorProfile> = config.annotators.iter().map(|p| p.reseeded(0)).collect();
    let mut simulator = SimulatedAnnotators::new(profiles);
    let recorded = run_replicate(&config, 0, &inputs, &mut simulator)?;
    let rows = replicate_label_rows(&recorded);
    println!(
        "recorded {} label rows across {} rounds",
        rows.len(),
        config.n_rounds
    );

    // Pass 2: replay the file. A real deployment writes these rows from
    // analyst sessions instead.
    let mut replay = ReplayLabels::from_rows(&rows);
    let replayed = run_replicate(&config, 0, &inputs, &mut replay)?;

    let identical = recorded
        .teams
        .iter()
        .zip(&replayed.teams)
        .all(|(a, b)| a.rounds == b.rounds && a.model_digests == b.model_digests);
    println!("replay reproduces the recorded run exactly: {identical}");

    for (recorded_log, replayed_log) in recorded.teams[0]
        .rounds
        .iter()
        .zip(&replayed.teams[0].rounds)
    {
        println!(
            "round {}: hrq true rate {:.2} (replayed {:.2})",
            recorded_log.round, recorded_log.hrq_true_rate, replayed_log.hrq_true_rate
        );
    }
    Ok(())
}
