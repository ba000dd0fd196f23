//! Depth-limited regression trees fit on binned features with second-order
//! (gradient/hessian) histogram split search.

use serde::{Deserialize, Serialize};

use super::histogram::{BinEdges, BinnedMatrix};

/// L2 smoothing on leaf values; numerical guard rather than a tuning knob.
const LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        /// Raw-value threshold (upper edge of the left bin span); `x <=
        /// threshold` goes left. Predictions never re-bin.
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Multiply every leaf value by `factor` (used by the training-loss
    /// safeguard).
    pub fn scale_leaves(&mut self, factor: f64) {
        for node in &mut self.nodes {
            if let Node::Leaf { value } = node {
                *value *= factor;
            }
        }
    }
}

pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
}

struct FitContext<'a> {
    binned: &'a BinnedMatrix,
    edges: &'a BinEdges,
    gradients: &'a [f64],
    hessians: &'a [f64],
    params: &'a TreeParams,
}

/// Fit one regression tree to the negative gradient. `rows` must be sorted
/// by instance id before entry; histogram accumulation then visits rows in a
/// canonical order, so the fitted tree is independent of input row order.
pub fn fit_tree(
    binned: &BinnedMatrix,
    edges: &BinEdges,
    gradients: &[f64],
    hessians: &[f64],
    rows: Vec<u32>,
    params: &TreeParams,
) -> RegressionTree {
    let mut tree = RegressionTree { nodes: Vec::new() };
    let ctx = FitContext {
        binned,
        edges,
        gradients,
        hessians,
        params,
    };
    grow(&ctx, &mut tree, rows, 0);
    tree
}

fn leaf_value(ctx: &FitContext<'_>, rows: &[u32]) -> f64 {
    let mut grad = 0.0;
    let mut hess = 0.0;
    for &row in rows {
        grad += ctx.gradients[row as usize];
        hess += ctx.hessians[row as usize];
    }
    -ctx.params.learning_rate * grad / (hess + LAMBDA)
}

struct BestSplit {
    feature: usize,
    bin: u16,
    gain: f64,
}

fn grow(ctx: &FitContext<'_>, tree: &mut RegressionTree, rows: Vec<u32>, depth: usize) -> u32 {
    let index = tree.nodes.len() as u32;
    if depth >= ctx.params.max_depth || rows.len() < 2 * ctx.params.min_samples_leaf {
        tree.nodes.push(Node::Leaf {
            value: leaf_value(ctx, &rows),
        });
        return index;
    }
    let best = find_best_split(ctx, &rows);
    let Some(best) = best else {
        tree.nodes.push(Node::Leaf {
            value: leaf_value(ctx, &rows),
        });
        return index;
    };

    // Placeholder; children are appended next and the node patched after.
    tree.nodes.push(Node::Leaf { value: 0.0 });
    let column = &ctx.binned.columns[best.feature];
    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
        .into_iter()
        .partition(|&row| column[row as usize] <= best.bin);
    let left = grow(ctx, tree, left_rows, depth + 1);
    let right = grow(ctx, tree, right_rows, depth + 1);
    tree.nodes[index as usize] = Node::Split {
        feature: best.feature as u32,
        threshold: ctx.edges.per_feature[best.feature][best.bin as usize],
        left,
        right,
    };
    index
}

fn find_best_split(ctx: &FitContext<'_>, rows: &[u32]) -> Option<BestSplit> {
    let mut total_grad = 0.0;
    let mut total_hess = 0.0;
    for &row in rows {
        total_grad += ctx.gradients[row as usize];
        total_hess += ctx.hessians[row as usize];
    }
    let parent_score = total_grad * total_grad / (total_hess + LAMBDA);

    let mut best: Option<BestSplit> = None;
    let n_features = ctx.binned.columns.len();
    let mut hist_grad = Vec::new();
    let mut hist_hess = Vec::new();
    let mut hist_count = Vec::new();
    for feature in 0..n_features {
        let n_bins = ctx.edges.n_bins(feature);
        if n_bins < 2 {
            continue;
        }
        hist_grad.clear();
        hist_grad.resize(n_bins, 0.0);
        hist_hess.clear();
        hist_hess.resize(n_bins, 0.0);
        hist_count.clear();
        hist_count.resize(n_bins, 0usize);
        let column = &ctx.binned.columns[feature];
        for &row in rows {
            let bin = column[row as usize] as usize;
            hist_grad[bin] += ctx.gradients[row as usize];
            hist_hess[bin] += ctx.hessians[row as usize];
            hist_count[bin] += 1;
        }
        let mut left_grad = 0.0;
        let mut left_hess = 0.0;
        let mut left_count = 0usize;
        for bin in 0..n_bins - 1 {
            left_grad += hist_grad[bin];
            left_hess += hist_hess[bin];
            left_count += hist_count[bin];
            let right_count = rows.len() - left_count;
            if left_count < ctx.params.min_samples_leaf || right_count < ctx.params.min_samples_leaf
            {
                continue;
            }
            let right_grad = total_grad - left_grad;
            let right_hess = total_hess - left_hess;
            let gain = left_grad * left_grad / (left_hess + LAMBDA)
                + right_grad * right_grad / (right_hess + LAMBDA)
                - parent_score;
            // Strict improvement; ties keep the earliest (feature, bin),
            // which pins the tree structure deterministically.
            if gain > 1e-12 && best.as_ref().map(|b| gain > b.gain).unwrap_or(true) {
                best = Some(BestSplit {
                    feature,
                    bin: bin as u16,
                    gain,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_fit(values: Vec<Vec<f64>>, gradients: Vec<f64>) -> RegressionTree {
        let refs: Vec<&[f64]> = values.iter().map(|r| r.as_slice()).collect();
        let edges = BinEdges::from_rows(&refs, refs[0].len(), 32);
        let binned = BinnedMatrix::new(&refs, &edges);
        let hessians = vec![1.0; gradients.len()];
        let rows: Vec<u32> = (0..gradients.len() as u32).collect();
        fit_tree(
            &binned,
            &edges,
            &gradients,
            &hessians,
            rows,
            &TreeParams {
                max_depth: 3,
                min_samples_leaf: 1,
                learning_rate: 1.0,
            },
        )
    }

    #[test]
    fn splits_a_clean_step() {
        let values: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let gradients: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { -1.0 }).collect();
        let tree = toy_fit(values, gradients);
        // Left half should predict about -1, right half about +1.
        assert!(tree.predict(&[0.0]) < -0.9);
        assert!(tree.predict(&[9.0]) > 0.9);
    }

    #[test]
    fn constant_gradient_yields_single_leaf() {
        let values: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let tree = toy_fit(values, vec![2.0; 6]);
        assert_eq!(tree.nodes.len(), 1);
        assert!((tree.predict(&[3.0]) + 2.0).abs() < 1e-5);
    }
}
