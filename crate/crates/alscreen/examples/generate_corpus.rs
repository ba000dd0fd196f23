//! Generate a seeded synthetic corpus of redacted email records with planted
//! exfiltration anomalies, validate it, and split it into an initializer
//! plus per-round pools the way a daily detection feed would arrive.
//!
//! Run with: `cargo run --example generate_corpus`

use alscreen::data::validate_corpus;
use alscreen::synth::{generate_corpus, partition_rounds, GeneratorConfig};

fn main() -> alscreen::Result<()> {
    let config = GeneratorConfig {
        seed: 11,
        n_records: 4000,
        anomaly_rate: 0.04,
        ..GeneratorConfig::default()
    };
    let (records, difficulties) = generate_corpus(&config)?;

    let report = validate_corpus(&records);
    println!(
        "generated {} records, anomaly prevalence {:.2}%, {} invariant violations",
        report.count,
        report.anomaly_prevalence * 100.0,
        report.violations.len()
    );

    let sample = &records[0];
    println!(
        "first record: {} from {} to {:?} (similarity {:.2}, sensitive subject: {})",
        sample.id,
        sample.sender_address,
        sample.recipient_addresses,
        sample.name_address_similarity,
        sample.subject_sensitive,
    );

    // Ambiguous records are hard for an annotator; evident ones are easy.
    let mean_difficulty: f64 =
        difficulties.iter().map(|d| d.difficulty).sum::<f64>() / difficulties.len() as f64;
    println!("mean labeling difficulty {mean_difficulty:.3}");

    let (init_set, pools) = partition_rounds(&records, 8, 200, 42)?;
    println!(
        "partitioned into a {}-record initializer plus {} pools of sizes {:?}",
        init_set.len(),
        pools.len(),
        pools.iter().map(Vec::len).collect::<Vec<_>>()
    );
    println!(
        "pool 1 spans days {}..{}, pool 8 spans days {}..{}",
        pools[0].first().unwrap().day_of_week,
        pools[0].last().unwrap().day_of_week,
        pools[7].first().unwrap().day_of_week,
        pools[7].last().unwrap().day_of_week,
    );
    Ok(())
}
