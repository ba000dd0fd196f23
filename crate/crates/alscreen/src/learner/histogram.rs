//! Quantile bin edges and the binned feature matrix used by tree fitting.

/// Per-feature bin upper edges. A value `x` falls into the first bin whose
/// edge satisfies `x <= edge`; the last edge is +inf so every value lands
/// somewhere. Edges are midpoints between observed values, so predictions on
/// raw features reproduce the training-time binning exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEdges {
    pub per_feature: Vec<Vec<f64>>,
}

impl BinEdges {
    /// Compute edges from the training matrix (rows of equal length), using
    /// up to `max_bins` equal-frequency bins per feature. Only the sorted
    /// values determine the edges, so row order cannot matter.
    pub fn from_rows(rows: &[&[f64]], n_features: usize, max_bins: usize) -> Self {
        let max_bins = max_bins.max(2);
        let mut per_feature = Vec::with_capacity(n_features);
        for feature in 0..n_features {
            let mut values: Vec<f64> = rows.iter().map(|r| r[feature]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            let edges = if values.len() <= max_bins {
                // One bin per distinct value.
                let mut edges: Vec<f64> = values.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
                edges.push(f64::INFINITY);
                edges
            } else {
                let mut edges = Vec::with_capacity(max_bins);
                for k in 1..max_bins {
                    let idx = k * values.len() / max_bins;
                    let edge = (values[idx - 1] + values[idx]) / 2.0;
                    if edges.last() != Some(&edge) {
                        edges.push(edge);
                    }
                }
                edges.push(f64::INFINITY);
                edges
            };
            per_feature.push(edges);
        }
        BinEdges { per_feature }
    }

    pub fn bin(&self, feature: usize, value: f64) -> u16 {
        let edges = &self.per_feature[feature];
        edges.partition_point(|edge| value > *edge) as u16
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.per_feature[feature].len()
    }
}

/// Column-major binned matrix: `columns[feature][row]`.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub columns: Vec<Vec<u16>>,
}

impl BinnedMatrix {
    pub fn new(rows: &[&[f64]], edges: &BinEdges) -> Self {
        let n_rows = rows.len();
        let n_features = edges.per_feature.len();
        let mut columns = Vec::with_capacity(n_features);
        for feature in 0..n_features {
            let mut column = Vec::with_capacity(n_rows);
            for row in rows {
                column.push(edges.bin(feature, row[feature]));
            }
            columns.push(column);
        }
        BinnedMatrix { columns }
    }
}
