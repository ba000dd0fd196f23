//! Krippendorff's alpha: chance-corrected inter-rater agreement tolerant of
//! missing ratings and any number of raters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Difference function applied between two rating values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMetric {
    /// delta² = 0 if equal, 1 otherwise.
    Nominal,
    /// delta² = (a - b)²; appropriate for the ordered, equally spaced
    /// 0..=10 pseudo-class scale.
    Interval,
}

impl AlphaMetric {
    fn delta_sq(self, a: f64, b: f64) -> f64 {
        match self {
            AlphaMetric::Nominal => f64::from(a != b),
            AlphaMetric::Interval => (a - b) * (a - b),
        }
    }
}

/// alpha = 1 - D_o / D_e over the coincidence-matrix formulation.
///
/// `ratings` is an annotator × unit matrix (rows = annotators, columns =
/// units); `None` marks a missing cell. Units with fewer than two ratings
/// contribute nothing. Errors with "alpha undefined" when fewer than two
/// units are pairable or when the pooled ratings carry no variation.
pub fn krippendorff_alpha(ratings: &[Vec<Option<f64>>], metric: AlphaMetric) -> Result<f64> {
    let n_units = ratings.first().map(|row| row.len()).unwrap_or(0);
    if ratings.iter().any(|row| row.len() != n_units) {
        return Err(Error::InvalidInput(
            "ratings matrix rows have unequal lengths".into(),
        ));
    }

    let mut pairable_units = 0usize;
    let mut observed = 0.0; // sum over units of pair disagreement / (m_u - 1)
    let mut n_pairable = 0.0f64;
    let mut value_counts: BTreeMap<u64, (f64, f64)> = BTreeMap::new(); // bits -> (value, count)

    for unit in 0..n_units {
        let values: Vec<f64> = ratings.iter().filter_map(|row| row[unit]).collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        pairable_units += 1;
        n_pairable += m as f64;
        for v in &values {
            let entry = value_counts.entry(v.to_bits()).or_insert((*v, 0.0));
            entry.1 += 1.0;
        }
        let weight = 1.0 / (m as f64 - 1.0);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    observed += metric.delta_sq(values[i], values[j]) * weight;
                }
            }
        }
    }

    if pairable_units < 2 {
        return Err(Error::Undefined(
            "alpha undefined: fewer than two units with two or more ratings".into(),
        ));
    }

    let mut expected = 0.0;
    let counts: Vec<(f64, f64)> = value_counts.into_values().collect();
    for (va, ca) in &counts {
        for (vb, cb) in &counts {
            expected += ca * cb * metric.delta_sq(*va, *vb);
        }
    }

    let d_o = observed / n_pairable;
    let d_e = expected / (n_pairable * (n_pairable - 1.0));
    if d_e == 0.0 {
        return Err(Error::Undefined(
            "alpha undefined: pooled ratings carry no variation".into(),
        ));
    }
    Ok(1.0 - d_o / d_e)
}
