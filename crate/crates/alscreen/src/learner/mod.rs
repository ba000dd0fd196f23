//! Gradient-boosted decision trees over histogram features, with softmax
//! multinomial boosting covering both the binary and the 11-class
//! pseudo-probability modes.
//!
//! Training is a pure function of (data, config): rows are canonicalized by
//! instance id before any accumulation, split ties resolve to the earliest
//! (feature, bin), and there is no subsampling, so refitting on a permuted
//! training set reproduces the model bit for bit. Training loss is
//! non-increasing per boosting round; a step-halving safeguard enforces the
//! contract even for aggressive learning rates.

mod histogram;
mod tree;

pub use tree::{Node, RegressionTree};

use serde::{Deserialize, Serialize};

use crate::data::{ClassDistribution, FeatureVector};
use crate::error::{Error, Result};
use crate::featurize::FeatureSchema;
use histogram::{BinEdges, BinnedMatrix};
use tree::TreeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub n_boosting_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub n_histogram_bins: usize,
    /// 2 for binary anomaly labels, 11 for pseudo-probability classes.
    pub class_count: usize,
    /// Inverse-prevalence sample weights; applied in binary mode only.
    pub balance_classes: bool,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            n_boosting_rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 5,
            n_histogram_bins: 32,
            class_count: 2,
            balance_classes: true,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.class_count != 2 && self.class_count != 11 {
            return Err(Error::Config(format!(
                "class_count must be 2 or 11, got {}",
                self.class_count
            )));
        }
        if self.n_boosting_rounds == 0
            || self.max_depth == 0
            || self.min_samples_leaf == 0
            || self.n_histogram_bins < 2
        {
            return Err(Error::Config(
                "boosting rounds, depth and leaf size must be positive; bins >= 2".into(),
            ));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted ensemble: per-class tree lists plus per-class base scores,
/// stamped with the digest of the feature schema it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub config: LearnerConfig,
    /// trees[round][class]
    pub trees: Vec<Vec<RegressionTree>>,
    pub base_scores: Vec<f64>,
    pub feature_schema_hash: u64,
    /// Weighted multinomial log-loss on the training set after each boosting
    /// round; non-increasing by contract.
    pub training_loss: Vec<f64>,
}

fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Fit by softmax multinomial boosting: each round fits one depth-limited
/// histogram regression tree per class to the negative gradient of the
/// weighted log-loss. Requires at least two distinct target classes.
pub fn train(
    features: &[FeatureVector],
    targets: &[usize],
    config: &LearnerConfig,
    schema: &FeatureSchema,
) -> Result<TrainedModel> {
    config.validate()?;
    if features.len() != targets.len() {
        return Err(Error::InvalidInput(
            "features and targets lengths differ".into(),
        ));
    }
    if features.is_empty() {
        return Err(Error::DegenerateTraining("empty training set".into()));
    }
    let n_features = schema.len();
    for fv in features {
        if fv.values.len() != n_features {
            return Err(Error::SchemaMismatch(format!(
                "vector {} has {} features, schema expects {}",
                fv.id,
                fv.values.len(),
                n_features
            )));
        }
    }
    let k = config.class_count;
    if let Some(&bad) = targets.iter().find(|&&t| t >= k) {
        return Err(Error::InvalidInput(format!(
            "target class {bad} outside 0..{k}"
        )));
    }
    {
        let mut seen = vec![false; k];
        for &t in targets {
            seen[t] = true;
        }
        if seen.iter().filter(|s| **s).count() < 2 {
            return Err(Error::DegenerateTraining(
                "all targets share a single class".into(),
            ));
        }
    }

    // Canonical row order: ascending instance id. Histogram accumulation and
    // partitioning then never depend on caller ordering.
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| features[a].id.cmp(&features[b].id));
    let rows: Vec<&[f64]> = order
        .iter()
        .map(|&i| features[i].values.as_slice())
        .collect();
    let targets: Vec<usize> = order.iter().map(|&i| targets[i]).collect();
    let n = rows.len();

    let weights: Vec<f64> = if k == 2 && config.balance_classes {
        let positives = targets.iter().filter(|&&t| t == 1).count();
        let negatives = n - positives;
        let w = |count: usize| n as f64 / (2.0 * count.max(1) as f64);
        targets
            .iter()
            .map(|&t| if t == 1 { w(positives) } else { w(negatives) })
            .collect()
    } else {
        vec![1.0; n]
    };
    let weight_total: f64 = weights.iter().sum();

    let edges = BinEdges::from_rows(&rows, n_features, config.n_histogram_bins);
    let binned = BinnedMatrix::new(&rows, &edges);
    let params = TreeParams {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
        learning_rate: config.learning_rate,
    };

    let mut scores = vec![0.0f64; n * k]; // uniform base scores
    let loss_of = |scores: &[f64]| -> f64 {
        let mut loss = 0.0;
        let mut probs = vec![0.0f64; k];
        for i in 0..n {
            softmax_into(&scores[i * k..(i + 1) * k], &mut probs);
            loss -= weights[i] * probs[targets[i]].max(1e-300).ln();
        }
        loss / weight_total
    };

    let mut trees: Vec<Vec<RegressionTree>> = Vec::with_capacity(config.n_boosting_rounds);
    let mut training_loss = Vec::with_capacity(config.n_boosting_rounds);
    let mut previous_loss = loss_of(&scores);
    let mut gradients = vec![0.0f64; n];
    let mut hessians = vec![0.0f64; n];
    let mut prob_matrix = vec![0.0f64; n * k];

    for _ in 0..config.n_boosting_rounds {
        for (row_probs, row_scores) in prob_matrix.chunks_mut(k).zip(scores.chunks(k)) {
            softmax_into(row_scores, row_probs);
        }
        let mut round_trees = Vec::with_capacity(k);
        for class in 0..k {
            for i in 0..n {
                let p = prob_matrix[i * k + class];
                let y = f64::from(targets[i] == class);
                gradients[i] = weights[i] * (p - y);
                hessians[i] = (weights[i] * p * (1.0 - p)).max(1e-12);
            }
            let all_rows: Vec<u32> = (0..n as u32).collect();
            round_trees.push(tree::fit_tree(
                &binned, &edges, &gradients, &hessians, all_rows, &params,
            ));
        }

        // Candidate update, with step halving if the loss would rise.
        let mut deltas = vec![0.0f64; n * k];
        for i in 0..n {
            for (class, tree) in round_trees.iter().enumerate() {
                deltas[i * k + class] = tree.predict(rows[i]);
            }
        }
        let mut factor = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = scores
                .iter()
                .zip(&deltas)
                .map(|(s, d)| s + factor * d)
                .collect();
            let loss = loss_of(&candidate);
            if loss <= previous_loss {
                scores = candidate;
                previous_loss = loss;
                accepted = true;
                break;
            }
            factor /= 2.0;
        }
        if accepted {
            if factor != 1.0 {
                for tree in &mut round_trees {
                    tree.scale_leaves(factor);
                }
            }
        } else {
            // Gradient is effectively zero; freeze this round's contribution.
            for tree in &mut round_trees {
                tree.scale_leaves(0.0);
            }
        }
        training_loss.push(previous_loss);
        trees.push(round_trees);
    }

    Ok(TrainedModel {
        version: 1,
        config: config.clone(),
        trees,
        base_scores: vec![0.0; k],
        feature_schema_hash: schema.digest(),
        training_loss,
    })
}

impl TrainedModel {
    fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        if schema.digest() != self.feature_schema_hash {
            return Err(Error::SchemaMismatch(format!(
                "model trained under schema {:016x}, given {:016x}",
                self.feature_schema_hash,
                schema.digest()
            )));
        }
        Ok(())
    }

    fn raw_scores(&self, features: &[f64]) -> Vec<f64> {
        let mut scores = self.base_scores.clone();
        for round in &self.trees {
            for (class, tree) in round.iter().enumerate() {
                scores[class] += tree.predict(features);
            }
        }
        scores
    }

    /// Softmax class distribution for one vector.
    pub fn predict_proba(
        &self,
        x: &FeatureVector,
        schema: &FeatureSchema,
    ) -> Result<ClassDistribution> {
        self.check_schema(schema)?;
        if x.values.len() != schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "vector {} has {} features, schema expects {}",
                x.id,
                x.values.len(),
                schema.len()
            )));
        }
        let scores = self.raw_scores(&x.values);
        let mut probabilities = vec![0.0; scores.len()];
        softmax_into(&scores, &mut probabilities);
        ClassDistribution::new(probabilities)
    }

    /// Scalar anomaly score in [0, 1]: P(class 1) in binary mode, the
    /// expected pseudo-probability sum_c (c/10) P(c) in 11-class mode.
    pub fn anomaly_score(&self, x: &FeatureVector, schema: &FeatureSchema) -> Result<f64> {
        let distribution = self.predict_proba(x, schema)?;
        Ok(anomaly_score_of(&distribution))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Stable content digest of the fitted model, for change detection.
    pub fn digest(&self) -> u64 {
        crate::seed::fnv64(self.to_json().unwrap_or_default().as_bytes())
    }
}

/// Anomaly score of an already-computed distribution.
pub fn anomaly_score_of(distribution: &ClassDistribution) -> f64 {
    let p = distribution.probabilities();
    match p.len() {
        2 => p[1],
        k => {
            let top = (k - 1) as f64;
            p.iter()
                .enumerate()
                .map(|(c, prob)| c as f64 / top * prob)
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::InstanceId;

    fn schema2() -> FeatureSchema {
        FeatureSchema {
            version: 1,
            feature_names: vec!["x0".into(), "x1".into()],
            role_vocab: vec![],
            status_vocab: vec![],
        }
    }

    fn vector(id: usize, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            id: InstanceId(format!("e{id:03}")),
            values,
        }
    }

    /// 20-point linearly separable toy set: class = x0 > 1.0.
    fn separable() -> (Vec<FeatureVector>, Vec<usize>) {
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for i in 0..20 {
            let offset = (i % 10) as f64 * 0.05;
            if i < 10 {
                features.push(vector(i, vec![0.2 + offset, 1.0 - offset]));
                targets.push(0);
            } else {
                features.push(vector(i, vec![1.8 + offset, 0.3 + offset]));
                targets.push(1);
            }
        }
        (features, targets)
    }

    fn toy_config() -> LearnerConfig {
        LearnerConfig {
            n_boosting_rounds: 50,
            max_depth: 2,
            min_samples_leaf: 1,
            ..LearnerConfig::default()
        }
    }

    #[test]
    fn separable_set_reaches_perfect_training_accuracy() {
        let (features, targets) = separable();
        let schema = schema2();
        let model = train(&features, &targets, &toy_config(), &schema).unwrap();
        let mut correct = 0;
        for (fv, &target) in features.iter().zip(&targets) {
            let p = model.predict_proba(fv, &schema).unwrap();
            let argmax = p
                .probabilities()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            correct += usize::from(argmax == target);
        }
        assert_eq!(correct, 20);
    }

    #[test]
    fn single_class_input_is_degenerate() {
        let (features, _) = separable();
        let targets = vec![1usize; features.len()];
        assert!(matches!(
            train(&features, &targets, &toy_config(), &schema2()),
            Err(Error::DegenerateTraining(_))
        ));
    }

    #[test]
    fn training_is_deterministic_and_order_independent() {
        let (features, targets) = separable();
        let schema = schema2();
        let a = train(&features, &targets, &toy_config(), &schema).unwrap();
        let b = train(&features, &targets, &toy_config(), &schema).unwrap();
        assert_eq!(a, b);
        // Reverse the row order; the fitted model must be identical.
        let mut reversed: Vec<(FeatureVector, usize)> = features
            .iter()
            .cloned()
            .zip(targets.iter().copied())
            .collect();
        reversed.reverse();
        let rf: Vec<FeatureVector> = reversed.iter().map(|(f, _)| f.clone()).collect();
        let rt: Vec<usize> = reversed.iter().map(|(_, t)| *t).collect();
        let c = train(&rf, &rt, &toy_config(), &schema).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let (features, targets) = separable();
        let model = train(&features, &targets, &toy_config(), &schema2()).unwrap();
        for pair in model.training_loss.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss rose: {pair:?}");
        }
        // Also holds at an aggressive learning rate thanks to the safeguard.
        let config = LearnerConfig {
            learning_rate: 5.0,
            ..toy_config()
        };
        let model = train(&features, &targets, &config, &schema2()).unwrap();
        for pair in model.training_loss.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss rose: {pair:?}");
        }
    }

    #[test]
    fn untrained_model_predicts_uniformly() {
        let (features, targets) = separable();
        let schema = schema2();
        let config = LearnerConfig {
            n_boosting_rounds: 1,
            ..toy_config()
        };
        let mut model = train(&features, &targets, &config, &schema).unwrap();
        model.trees.clear(); // zero boosting rounds, uniform base scores
        let p = model.predict_proba(&features[0], &schema).unwrap();
        for prob in p.probabilities() {
            assert!((prob - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one_for_many_vectors() {
        use rand::Rng;
        use rand::SeedableRng;
        let (features, targets) = separable();
        let schema = schema2();
        let model = train(&features, &targets, &toy_config(), &schema).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for i in 0..1000 {
            let fv = vector(
                i,
                vec![rng.random::<f64>() * 3.0, rng.random::<f64>() * 2.0],
            );
            let p = model.predict_proba(&fv, &schema).unwrap();
            let sum: f64 = p.probabilities().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
            assert!(p.probabilities().iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn anomaly_score_definitions() {
        let binary = ClassDistribution::new(vec![0.9, 0.1]).unwrap();
        assert_eq!(anomaly_score_of(&binary), 0.1);

        let mut mass = vec![0.0; 11];
        mass[10] = 1.0;
        let all_top = ClassDistribution::new(mass).unwrap();
        assert_eq!(anomaly_score_of(&all_top), 1.0);

        let uniform = ClassDistribution::new(vec![1.0 / 11.0; 11]).unwrap();
        assert!((anomaly_score_of(&uniform) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let (features, targets) = separable();
        let schema = schema2();
        let model = train(&features, &targets, &toy_config(), &schema).unwrap();
        let other = FeatureSchema {
            version: 1,
            feature_names: vec!["a".into(), "b".into()],
            role_vocab: vec![],
            status_vocab: vec![],
        };
        assert!(matches!(
            model.predict_proba(&features[0], &other),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn multiclass_mode_trains_on_sparse_classes() {
        let (features, _) = separable();
        // Only classes 0 and 10 present, as in an early experiment round.
        let targets: Vec<usize> = (0..20).map(|i| if i < 10 { 0 } else { 10 }).collect();
        let config = LearnerConfig {
            class_count: 11,
            ..toy_config()
        };
        let schema = schema2();
        let model = train(&features, &targets, &config, &schema).unwrap();
        let score_low = model.anomaly_score(&features[0], &schema).unwrap();
        let score_high = model.anomaly_score(&features[15], &schema).unwrap();
        assert!(score_high > score_low);
    }

    #[test]
    fn model_roundtrips_through_json() {
        let (features, targets) = separable();
        let schema = schema2();
        let model = train(&features, &targets, &toy_config(), &schema).unwrap();
        let json = model.to_json().unwrap();
        let back = TrainedModel::from_json(&json).unwrap();
        assert_eq!(model, back);
        assert_eq!(model.digest(), back.digest());
    }
}
