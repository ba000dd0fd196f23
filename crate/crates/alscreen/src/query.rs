//! Per-instance uncertainty measures and HRQ/UQ/RQ batch composition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ClassDistribution, FeatureVector, InstanceId, QueryBatch};
use crate::error::{Error, Result};
use crate::featurize::FeatureSchema;
use crate::learner::TrainedModel;

/// Uncertainty of the most likely class: `1 - max_i p_i`, in
/// [0, 1 - 1/k].
pub fn least_confident(p: &ClassDistribution) -> f64 {
    1.0 - p
        .probabilities()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Difference between the top and second probabilities; smaller means more
/// uncertain. Needs at least two classes.
pub fn margin(p: &ClassDistribution) -> Result<f64> {
    if p.class_count() < 2 {
        return Err(Error::InvalidInput(
            "margin needs at least two classes".into(),
        ));
    }
    let mut top = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &prob in p.probabilities() {
        if prob > top {
            second = top;
            top = prob;
        } else if prob > second {
            second = prob;
        }
    }
    Ok(top - second)
}

/// Shannon entropy in nats, `-sum p ln p` with `0 ln 0 = 0`; range
/// [0, ln k].
pub fn entropy(p: &ClassDistribution) -> f64 {
    -p.probabilities()
        .iter()
        .filter(|prob| **prob > 0.0)
        .map(|prob| prob * prob.ln())
        .sum::<f64>()
}

/// Which uncertainty measure ranks the UQ slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMeasure {
    LeastConfident,
    Margin,
    Entropy,
}

impl UncertaintyMeasure {
    pub fn of(self, p: &ClassDistribution) -> Result<f64> {
        Ok(match self {
            UncertaintyMeasure::LeastConfident => least_confident(p),
            UncertaintyMeasure::Margin => margin(p)?,
            UncertaintyMeasure::Entropy => entropy(p),
        })
    }

    /// True when larger values mean more uncertain.
    fn descending(self) -> bool {
        !matches!(self, UncertaintyMeasure::Margin)
    }
}

/// Slot sizes for one query batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchSizes {
    pub hrq: usize,
    pub uq: usize,
    pub rq: usize,
}

impl Default for BatchSizes {
    fn default() -> Self {
        BatchSizes {
            hrq: 14,
            uq: 3,
            rq: 3,
        }
    }
}

impl BatchSizes {
    pub fn total(&self) -> usize {
        self.hrq + self.uq + self.rq
    }
}

/// Top-k ids from (id, score) pairs; ties break toward the ascending id so
/// rankings are reproducible.
pub(crate) fn top_k_by_score(
    mut scored: Vec<(InstanceId, f64)>,
    k: usize,
    descending: bool,
) -> Vec<InstanceId> {
    scored.sort_by(|a, b| {
        let ord = if descending {
            b.1.total_cmp(&a.1)
        } else {
            a.1.total_cmp(&b.1)
        };
        ord.then_with(|| a.0.cmp(&b.0))
    });
    scored.into_iter().take(k).map(|(id, _)| id).collect()
}

/// Top-k pool ids by descending anomaly score (the high-risk queue). k is
/// clipped to the pool size.
pub fn rank_hrq(
    pool: &[FeatureVector],
    model: &TrainedModel,
    schema: &FeatureSchema,
    k: usize,
) -> Result<Vec<InstanceId>> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("empty pool".into()));
    }
    let scored = pool
        .iter()
        .map(|fv| Ok((fv.id.clone(), model.anomaly_score(fv, schema)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(top_k_by_score(scored, k, true))
}

/// Top-k most-uncertain pool ids under the given measure.
pub fn rank_uq(
    pool: &[FeatureVector],
    model: &TrainedModel,
    schema: &FeatureSchema,
    k: usize,
    measure: UncertaintyMeasure,
) -> Result<Vec<InstanceId>> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("empty pool".into()));
    }
    let scored = pool
        .iter()
        .map(|fv| {
            let p = model.predict_proba(fv, schema)?;
            Ok((fv.id.clone(), measure.of(&p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(top_k_by_score(scored, k, measure.descending()))
}

/// Compose one round's batch: fill HRQ slots first, UQ from the remainder,
/// then RQ uniformly at random (seeded) from what is left. When the pool is
/// smaller than the requested total, slots fill in HRQ, UQ, RQ priority
/// order. The three id sets are pairwise disjoint by construction; the
/// caller removes the selected ids from its pool.
pub fn compose_batch(
    round: u32,
    pool: &[FeatureVector],
    model: &TrainedModel,
    schema: &FeatureSchema,
    sizes: &BatchSizes,
    measure: UncertaintyMeasure,
    rq_seed: u64,
) -> Result<QueryBatch> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("empty pool".into()));
    }
    let hrq_ids = rank_hrq(pool, model, schema, sizes.hrq.min(pool.len()))?;

    let after_hrq: Vec<&FeatureVector> =
        pool.iter().filter(|fv| !hrq_ids.contains(&fv.id)).collect();
    let uq_ids = if sizes.uq == 0 || after_hrq.is_empty() {
        Vec::new()
    } else {
        let owned: Vec<FeatureVector> = after_hrq.iter().map(|fv| (*fv).clone()).collect();
        rank_uq(&owned, model, schema, sizes.uq.min(owned.len()), measure)?
    };

    let mut remainder: Vec<&InstanceId> = pool
        .iter()
        .map(|fv| &fv.id)
        .filter(|id| !hrq_ids.contains(id) && !uq_ids.contains(id))
        .collect();
    remainder.sort();
    let rq_count = sizes.rq.min(remainder.len());
    let rq_ids = if rq_count == 0 {
        Vec::new()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rq_seed);
        let chosen = rand::seq::index::sample(&mut rng, remainder.len(), rq_count);
        let mut ids: Vec<InstanceId> = chosen.iter().map(|i| remainder[i].clone()).collect();
        ids.sort();
        ids
    };

    Ok(QueryBatch {
        round,
        hrq_ids,
        uq_ids,
        rq_ids,
    })
}
