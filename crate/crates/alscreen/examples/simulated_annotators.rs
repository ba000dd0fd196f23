//! Simulated expert annotators: skill, calibrated confidence, bias, caution,
//! day-to-day variation, motivation decay, and the three team schemes.
//!
//! Run with: `cargo run --example simulated_annotators`

use alscreen::annotator::{answer_batch, simulate_label, AnnotatorProfile, TeamKind, TeamScheme};
use alscreen::data::QueryBatch;
use alscreen::synth::{generate_corpus, CorpusIndex, GeneratorConfig};

fn main() -> alscreen::Result<()> {
    let (records, difficulties) = generate_corpus(&GeneratorConfig {
        seed: 5,
        n_records: 200,
        anomaly_rate: 0.2,
        ..GeneratorConfig::default()
    })?;
    let corpus = CorpusIndex::new(&records, &difficulties)?;

    let expert = AnnotatorProfile {
        annotator_id: "expert".into(),
        skill: 0.95,
        confidence_bias: 0.0,
        confidence_noise_sd: 0.0,
        positive_label_caution: 0.0,
        motivation_decay: 0.0,
        skill_day_sd: 0.0,
        seed: 1,
    };
    let novice = AnnotatorProfile {
        annotator_id: "novice".into(),
        skill: 0.55,
        confidence_bias: 1.5,
        confidence_noise_sd: 1.0,
        positive_label_caution: 2.0,
        motivation_decay: 0.05,
        skill_day_sd: 0.1,
        seed: 2,
    };

    // Confidence is calibrated: it tracks the annotator's true chance of
    // being right, which falls with record difficulty and rises with skill.
    println!("instance        difficulty  expert(label,conf)  novice(label,conf)");
    for record in records.iter().take(6) {
        let (full, difficulty) = corpus.get(&record.id)?;
        let e = simulate_label(&expert, full, difficulty, 1);
        let n = simulate_label(&novice, full, difficulty, 1);
        println!(
            "{}     {:.2}        ({}, {:2})            ({}, {:2})",
            record.id, difficulty.difficulty, e.label, e.confidence, n.label, n.confidence
        );
    }

    // Team schemes answer whole batches.
    let ids: Vec<_> = records.iter().map(|r| r.id.clone()).collect();
    let batch = QueryBatch {
        round: 1,
        hrq_ids: ids[..14].to_vec(),
        uq_ids: ids[14..17].to_vec(),
        rq_ids: ids[17..20].to_vec(),
    };
    let crew: Vec<AnnotatorProfile> = (0..5)
        .map(|i| AnnotatorProfile {
            annotator_id: format!("g{i}").as_str().into(),
            skill: 0.9 - 0.1 * i as f64,
            confidence_bias: 0.0,
            confidence_noise_sd: 1.0,
            positive_label_caution: 0.0,
            motivation_decay: 0.0,
            skill_day_sd: 0.0,
            seed: 10 + i as u64,
        })
        .collect();
    let group = TeamScheme {
        kind: TeamKind::Group,
        annotator_ids: crew.iter().map(|p| p.annotator_id.clone()).collect(),
        model_id: "A".into(),
        swap_round: None,
        group_threshold: Some(2),
    };
    let (raw, resolved) = answer_batch(&group, &crew, &batch, &corpus, 1)?;
    println!(
        "\ngroup of {} labeled {} instances: {} raw labels, {} resolved by 2-of-5 vote",
        crew.len(),
        batch.len(),
        raw.len(),
        resolved.len()
    );

    let swap = TeamScheme {
        kind: TeamKind::Swap,
        annotator_ids: vec![crew[0].annotator_id.clone(), crew[1].annotator_id.clone()],
        model_id: "E".into(),
        swap_round: Some(5),
        group_threshold: None,
    };
    for round in [1u32, 5] {
        let (raw, _) = answer_batch(&swap, &crew, &batch, &corpus, round)?;
        println!(
            "swap team, round {round}: labels come from {}",
            raw[0].annotator_id
        );
    }
    Ok(())
}
