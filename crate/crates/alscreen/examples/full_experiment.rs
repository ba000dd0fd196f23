//! A complete desk-scale study: corpus generation, multi-round batch active
//! learning with two team schemes, per-round retraining in both label modes,
//! and the full analysis battery, written out as a run directory.
//!
//! Run with: `cargo run --release --example full_experiment`

use alscreen::annotator::{AnnotatorProfile, TeamKind, TeamScheme};
use alscreen::experiment::report::{render_report, write_outputs};
use alscreen::experiment::{run_experiment, ExperimentConfig, LabelMode};
use alscreen::labels::ReclassifyMode;
use alscreen::learner::LearnerConfig;
use alscreen::query::{BatchSizes, UncertaintyMeasure};
use alscreen::synth::GeneratorConfig;

fn main() -> alscreen::Result<()> {
    let annotators = vec![
        AnnotatorProfile {
            annotator_id: "lead".into(),
            skill: 0.92,
            confidence_bias: 0.0,
            confidence_noise_sd: 0.5,
            positive_label_caution: 1.0,
            motivation_decay: 0.0,
            skill_day_sd: 0.1,
            seed: 71,
        },
        AnnotatorProfile {
            annotator_id: "junior".into(),
            skill: 0.7,
            confidence_bias: -1.0,
            confidence_noise_sd: 1.0,
            positive_label_caution: 2.0,
            motivation_decay: 0.05,
            skill_day_sd: 0.1,
            seed: 72,
        },
        AnnotatorProfile {
            annotator_id: "contractor".into(),
            skill: 0.6,
            confidence_bias: 2.0,
            confidence_noise_sd: 1.5,
            positive_label_caution: 0.0,
            motivation_decay: 0.08,
            skill_day_sd: 0.1,
            seed: 73,
        },
    ];
    let teams = vec![
        TeamScheme {
            kind: TeamKind::Individual,
            annotator_ids: vec!["lead".into()],
            model_id: "B".into(),
            swap_round: None,
            group_threshold: None,
        },
        TeamScheme {
            kind: TeamKind::Group,
            annotator_ids: vec!["lead".into(), "junior".into(), "contractor".into()],
            model_id: "A".into(),
            swap_round: None,
            group_threshold: Some(2),
        },
    ];
    let config = ExperimentConfig {
        version: 1,
        seed: 2024,
        n_rounds: 4,
        init_size: 150,
        replicates: 2,
        eval_size: 1500,
        reclassify_mode: ReclassifyMode::Midpoint,
        query_mode: LabelMode::Multiclass,
        uncertainty_measure: UncertaintyMeasure::Margin,
        f_betas: vec![0.5, 1.0, 2.0],
        output_dir: std::env::temp_dir().join("alscreen-demo-run"),
        write_models: true,
        generator: GeneratorConfig {
            seed: 2024,
            n_records: 3000,
            anomaly_rate: 0.06,
            ..GeneratorConfig::default()
        },
        batch_sizes: BatchSizes::default(),
        binary_learner: LearnerConfig {
            n_boosting_rounds: 60,
            class_count: 2,
            ..LearnerConfig::default()
        },
        multiclass_learner: LearnerConfig {
            n_boosting_rounds: 60,
            learning_rate: 0.05,
            max_depth: 2,
            min_samples_leaf: 10,
            class_count: 11,
            ..LearnerConfig::default()
        },
        annotators,
        teams,
        init_annotator: None,
    };

    let result = run_experiment(&config)?;
    write_outputs(&result)?;
    println!("{}", render_report(&result.analyses));
    println!("run directory: {}", config.output_dir.display());
    Ok(())
}
