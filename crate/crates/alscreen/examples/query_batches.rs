//! Uncertainty measures and batch composition: rank a pool by anomaly score
//! and model uncertainty, then fill the high-risk, uncertainty and random
//! slots of one query batch.
//!
//! Run with: `cargo run --example query_batches`

use alscreen::data::{ClassDistribution, EmailRecord};
use alscreen::featurize::{featurize_corpus, FeatureSchema};
use alscreen::learner::{train, LearnerConfig};
use alscreen::query::{
    compose_batch, entropy, least_confident, margin, rank_hrq, rank_uq, BatchSizes,
    UncertaintyMeasure,
};
use alscreen::synth::{generate_corpus, GeneratorConfig};

fn main() -> alscreen::Result<()> {
    // The three measures on a worked three-class distribution.
    let p = ClassDistribution::new(vec![0.15, 0.65, 0.20])?;
    println!("distribution [0.15, 0.65, 0.20]:");
    println!("  least confident = {:.2}", least_confident(&p));
    println!("  margin          = {:.2}", margin(&p)?);
    println!("  entropy         = {:.4} nats", entropy(&p));

    // A model over a small corpus, then one round's batch from a pool.
    let (records, _) = generate_corpus(&GeneratorConfig {
        seed: 17,
        n_records: 1200,
        anomaly_rate: 0.08,
        ..GeneratorConfig::default()
    })?;
    let blinded: Vec<_> = records.iter().map(EmailRecord::blinded).collect();
    let schema = FeatureSchema::from_corpus(&blinded);
    let features = featurize_corpus(&blinded, &schema);
    let targets: Vec<usize> = records
        .iter()
        .map(|r| usize::from(r.ground_truth))
        .collect();
    let model = train(
        &features[..600],
        &targets[..600],
        &LearnerConfig {
            n_boosting_rounds: 40,
            class_count: 2,
            ..LearnerConfig::default()
        },
        &schema,
    )?;

    let pool = &features[600..];
    let show = |ids: &[alscreen::data::InstanceId]| {
        ids.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    };
    let top_risky = rank_hrq(pool, &model, &schema, 5)?;
    println!("\ntop-5 high-risk ids: {}", show(&top_risky));
    let most_uncertain = rank_uq(pool, &model, &schema, 5, UncertaintyMeasure::Margin)?;
    println!("top-5 most-uncertain ids: {}", show(&most_uncertain));

    let batch = compose_batch(
        1,
        pool,
        &model,
        &schema,
        &BatchSizes::default(),
        UncertaintyMeasure::Margin,
        99,
    )?;
    println!(
        "\nbatch: {} HRQ + {} UQ + {} RQ = {} disjoint instances",
        batch.hrq_ids.len(),
        batch.uq_ids.len(),
        batch.rq_ids.len(),
        batch.len()
    );
    println!("random slots (seeded): {}", show(&batch.rq_ids));
    Ok(())
}
