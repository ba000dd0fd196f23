//! End-to-end checks of the experiment loop at small scale: structure,
//! conservation, determinism, replay equivalence, and the ground-truth
//! blinding instrumentation.

use alscreen::annotator::{AnnotatorProfile, TeamKind, TeamScheme};
use alscreen::experiment::{
    analyze, flip_ground_truth, replicate_label_rows, run_experiment, run_replicate,
    ExperimentConfig, LabelMode, ReplayLabels, ReplicateInputs, SimulatedAnnotators,
};
use alscreen::labels::ReclassifyMode;
use alscreen::learner::LearnerConfig;
use alscreen::query::{BatchSizes, UncertaintyMeasure};
use alscreen::synth::GeneratorConfig;

fn small_config() -> ExperimentConfig {
    let annotators = vec![
        AnnotatorProfile {
            annotator_id: "a1".into(),
            skill: 0.9,
            confidence_bias: 0.0,
            confidence_noise_sd: 0.5,
            positive_label_caution: 0.0,
            motivation_decay: 0.0,
            skill_day_sd: 0.0,
            seed: 5,
        },
        AnnotatorProfile {
            annotator_id: "a2".into(),
            skill: 0.7,
            confidence_bias: 0.0,
            confidence_noise_sd: 1.0,
            positive_label_caution: 1.0,
            motivation_decay: 0.0,
            skill_day_sd: 0.0,
            seed: 6,
        },
        AnnotatorProfile {
            annotator_id: "a3".into(),
            skill: 0.6,
            confidence_bias: -1.0,
            confidence_noise_sd: 1.0,
            positive_label_caution: 0.0,
            motivation_decay: 0.05,
            skill_day_sd: 0.0,
            seed: 7,
        },
    ];
    let teams = vec![
        TeamScheme {
            kind: TeamKind::Individual,
            annotator_ids: vec!["a1".into()],
            model_id: "B".into(),
            swap_round: None,
            group_threshold: None,
        },
        TeamScheme {
            kind: TeamKind::Group,
            annotator_ids: vec!["a1".into(), "a2".into(), "a3".into()],
            model_id: "A".into(),
            swap_round: None,
            group_threshold: Some(2),
        },
    ];
    ExperimentConfig {
        version: 1,
        seed: 424242,
        n_rounds: 3,
        init_size: 80,
        replicates: 2,
        eval_size: 500,
        reclassify_mode: ReclassifyMode::Midpoint,
        query_mode: LabelMode::Multiclass,
        uncertainty_measure: UncertaintyMeasure::Margin,
        f_betas: vec![0.5, 1.0, 2.0],
        output_dir: std::env::temp_dir().join("alscreen-pipeline"),
        write_models: false,
        generator: GeneratorConfig {
            n_records: 800,
            anomaly_rate: 0.08,
            ..GeneratorConfig::default()
        },
        batch_sizes: BatchSizes::default(),
        binary_learner: LearnerConfig {
            n_boosting_rounds: 20,
            class_count: 2,
            ..LearnerConfig::default()
        },
        multiclass_learner: LearnerConfig {
            n_boosting_rounds: 20,
            class_count: 11,
            ..LearnerConfig::default()
        },
        annotators,
        teams,
        init_annotator: None,
    }
}

#[test]
fn run_produces_complete_round_logs() {
    let config = small_config();
    let result = run_experiment(&config).unwrap();
    assert_eq!(result.replicates.len(), 2);
    for replicate in &result.replicates {
        assert_eq!(replicate.teams.len(), 2);
        for team in &replicate.teams {
            assert_eq!(team.rounds.len(), 3);
            for log in &team.rounds {
                assert_eq!(log.batch.hrq_ids.len(), 14);
                assert_eq!(log.batch.uq_ids.len(), 3);
                assert_eq!(log.batch.rq_ids.len(), 3);
                assert_eq!(log.resolved.len(), 20);
                assert_eq!(log.transformed.len(), 20);
                assert!(log.model_metrics.contains_key("binary_auprc"));
                assert!(log.model_metrics.contains_key("multiclass_auprc"));
                assert!(log.model_metrics.contains_key("multiclass_f0.5"));
                assert!((0.0..=1.0).contains(&log.hrq_true_rate));
                // Group team: every member labels every instance.
                if team.scheme.kind == TeamKind::Group {
                    assert_eq!(log.labels.len(), 60);
                }
            }
            assert_eq!(team.model_digests.len(), 3);
        }
    }
    // The analysis block exists for every team, and the group alpha is
    // present because a group team ran.
    assert_eq!(result.analyses.teams.len(), 2);
    assert!(result.analyses.group_alpha.is_some());
}

#[test]
fn identical_configs_reproduce_identical_results() {
    let config = small_config();
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    assert_eq!(a.analyses, b.analyses);
    for (ra, rb) in a.replicates.iter().zip(&b.replicates) {
        for (ta, tb) in ra.teams.iter().zip(&rb.teams) {
            assert_eq!(ta.rounds, tb.rounds);
            assert_eq!(ta.final_binary, tb.final_binary);
            assert_eq!(ta.final_multiclass, tb.final_multiclass);
        }
    }
}

#[test]
fn replaying_recorded_labels_reproduces_the_run() {
    let config = small_config();
    let inputs = ReplicateInputs::generate(&config, 0).unwrap();
    let profiles: Vec<AnnotatorProfile> = config.annotators.iter().map(|p| p.reseeded(0)).collect();
    let mut sim = SimulatedAnnotators::new(profiles);
    let recorded = run_replicate(&config, 0, &inputs, &mut sim).unwrap();

    let rows = replicate_label_rows(&recorded);
    let mut replay = ReplayLabels::from_rows(&rows);
    let replayed = run_replicate(&config, 0, &inputs, &mut replay).unwrap();

    for (a, b) in recorded.teams.iter().zip(&replayed.teams) {
        assert_eq!(a.rounds, b.rounds);
        assert_eq!(a.model_digests, b.model_digests);
    }
}

/// Poison instrumentation: with midpoint reclassification there is no code
/// path from the hidden anomaly flag into any training target, so flipping
/// every flag (and replaying the same labels) must leave queries, training
/// targets and fitted models identical; only evaluation metrics move.
#[test]
fn flipping_ground_truth_changes_only_evaluation() {
    let config = small_config();
    let inputs = ReplicateInputs::generate(&config, 0).unwrap();
    let profiles: Vec<AnnotatorProfile> = config.annotators.iter().map(|p| p.reseeded(0)).collect();
    let mut sim = SimulatedAnnotators::new(profiles);
    let recorded = run_replicate(&config, 0, &inputs, &mut sim).unwrap();
    let rows = replicate_label_rows(&recorded);

    let mut replay = ReplayLabels::from_rows(&rows);
    let baseline = run_replicate(&config, 0, &inputs, &mut replay).unwrap();

    let mut poisoned_inputs = ReplicateInputs {
        records: inputs.records.clone(),
        difficulties: inputs.difficulties.clone(),
        eval_records: inputs.eval_records.clone(),
    };
    flip_ground_truth(&mut poisoned_inputs.records);
    flip_ground_truth(&mut poisoned_inputs.eval_records);
    let mut replay = ReplayLabels::from_rows(&rows);
    let poisoned = run_replicate(&config, 0, &poisoned_inputs, &mut replay).unwrap();

    let mut metrics_changed = false;
    for (a, b) in baseline.teams.iter().zip(&poisoned.teams) {
        assert_eq!(a.final_binary, b.final_binary);
        assert_eq!(a.final_multiclass, b.final_multiclass);
        assert_eq!(a.model_digests, b.model_digests);
        for (la, lb) in a.rounds.iter().zip(&b.rounds) {
            assert_eq!(la.batch, lb.batch);
            assert_eq!(la.resolved, lb.resolved);
            assert_eq!(la.transformed, lb.transformed);
            if la.model_metrics != lb.model_metrics {
                metrics_changed = true;
            }
        }
    }
    assert!(
        metrics_changed,
        "evaluation metrics should move under poisoning"
    );
}

/// In oracle mode the reclassification rule consults ground truth, so the
/// same poisoning must change training targets.
#[test]
fn oracle_mode_is_not_blinded() {
    let mut config = small_config();
    config.reclassify_mode = ReclassifyMode::Oracle;
    config.teams.truncate(1);
    config.replicates = 1;
    // One round: under poisoning, later batches would diverge and the
    // replay would (correctly) run out of labels.
    config.n_rounds = 1;
    // A hesitant low-skill annotator, so the batch reliably contains missed
    // anomalies labeled 0 with confidence below 5.
    config.annotators[0].skill = 0.5;
    config.annotators[0].confidence_noise_sd = 2.0;
    config.annotators[0].confidence_bias = -3.0;
    config.generator.anomaly_rate = 0.2;
    let inputs = ReplicateInputs::generate(&config, 0).unwrap();
    let profiles: Vec<AnnotatorProfile> = config.annotators.iter().map(|p| p.reseeded(0)).collect();
    let mut sim = SimulatedAnnotators::new(profiles);
    let recorded = run_replicate(&config, 0, &inputs, &mut sim).unwrap();
    let rows = replicate_label_rows(&recorded);

    let mut replay = ReplayLabels::from_rows(&rows);
    let baseline = run_replicate(&config, 0, &inputs, &mut replay).unwrap();

    let mut poisoned_inputs = ReplicateInputs {
        records: inputs.records.clone(),
        difficulties: inputs.difficulties.clone(),
        eval_records: inputs.eval_records.clone(),
    };
    flip_ground_truth(&mut poisoned_inputs.records);
    let mut replay = ReplayLabels::from_rows(&rows);
    let poisoned = run_replicate(&config, 0, &poisoned_inputs, &mut replay).unwrap();

    let transformed_differ = baseline.teams[0]
        .rounds
        .iter()
        .zip(&poisoned.teams[0].rounds)
        .any(|(a, b)| a.transformed != b.transformed);
    assert!(transformed_differ, "oracle mode must consult ground truth");
}

#[test]
fn error_context_names_team_and_round() {
    let mut config = small_config();
    // Sabotage: an annotator the replay file will not know about.
    config.replicates = 1;
    let inputs = ReplicateInputs::generate(&config, 0).unwrap();
    let mut replay = ReplayLabels::from_rows(&[]);
    let Err(err) = run_replicate(&config, 0, &inputs, &mut replay) else {
        panic!("replay with no labels must fail");
    };
    let text = err.to_string();
    assert!(text.contains("round 1"), "got: {text}");
    assert!(text.contains("team"), "got: {text}");
}

#[test]
fn analyze_summarizes_per_team_trajectories() {
    let config = small_config();
    let result = run_experiment(&config).unwrap();
    let analyses = analyze(&config, &result.replicates);
    for team in &analyses.teams {
        let binary = &team.mean_auprc_by_round["binary"];
        let multiclass = &team.mean_auprc_by_round["multiclass"];
        assert_eq!(binary.len(), 3);
        assert_eq!(multiclass.len(), 3);
        assert!(binary.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(team.final_auprc_per_replicate["binary"].len(), 2);
    }
    assert_eq!(analyses.hrq_rate.per_round_mean.len(), 3);
    assert!(analyses.hrq_rate.jt_increasing.is_some());
    let alpha = analyses.group_alpha.as_ref().unwrap();
    assert_eq!(alpha.per_round_mean.len(), 3);
}
