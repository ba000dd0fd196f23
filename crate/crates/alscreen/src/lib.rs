//! Confidence-aware batch active learning for anomaly screening on redacted
//! email metadata, plus a desk-scale study simulator.
//!
//! The crate covers the full loop: seeded synthetic corpus generation with
//! planted exfiltration anomalies, featurization, a from-scratch
//! gradient-boosted tree learner (binary and 11-class pseudo-probability
//! modes), high-risk/uncertainty/random batch querying, confidence-label
//! transformation and group aggregation, simulated annotator teams, and the
//! evaluation battery (precision-recall analysis, Krippendorff's alpha,
//! Jonckheere-Terpstra and Pearson trend tests).
//!
//! Start with the runnable programs in `examples/`; each one demonstrates a
//! major capability end to end. The `alscreen` binary exposes the same
//! machinery as a small subcommand CLI driven by one TOML config file.

pub mod annotator;
pub mod data;
pub mod error;
pub mod experiment;
pub mod featurize;
pub mod io;
pub mod labels;
pub mod learner;
pub mod query;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
