//! Turn records into feature vectors: edit-distance name/address similarity,
//! cyclic time encoding, log-scaled sizes and one-of-k categorical blocks.
//!
//! Run with: `cargo run --example featurize_records`

use alscreen::data::EmailRecord;
use alscreen::featurize::{
    featurize, featurize_corpus, levenshtein, name_address_similarity, FeatureSchema,
};
use alscreen::synth::{generate_corpus, GeneratorConfig};

fn main() -> alscreen::Result<()> {
    // The self-send proxy: how close is a recipient address to the sender's
    // own name once case, domain and separators are stripped?
    for (name, address) in [
        ("jdoe", "jdoe@gmail.example"),
        ("john.doe", "jdoe@mail.example"),
        ("jdoe", "xqzw@corp.example"),
    ] {
        println!(
            "similarity({name:10}, {address:22}) = {:.4} (edit distance {})",
            name_address_similarity(name, address),
            levenshtein(name, address.split('@').next().unwrap()),
        );
    }

    let (records, _) = generate_corpus(&GeneratorConfig {
        seed: 3,
        n_records: 500,
        ..GeneratorConfig::default()
    })?;
    let blinded: Vec<_> = records.iter().map(EmailRecord::blinded).collect();

    // The schema fixes feature order and categorical vocabularies for the
    // whole corpus and travels with runs as a JSON sidecar.
    let schema = FeatureSchema::from_corpus(&blinded);
    println!(
        "\nschema: {} features, digest {:016x}",
        schema.len(),
        schema.digest()
    );
    println!("feature names: {:?}", schema.feature_names);

    let vectors = featurize_corpus(&blinded, &schema);
    let first = featurize(&blinded[0], &schema);
    println!(
        "\nvector for {}: {:?}",
        first.id,
        first
            .values
            .iter()
            .map(|v| (v * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    assert!(vectors.iter().all(|v| v.values.len() == schema.len()));
    println!("all {} vectors share the schema length", vectors.len());
    Ok(())
}
