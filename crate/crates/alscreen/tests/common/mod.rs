//! Independent brute-force oracles shared by the oracle and acceptance
//! suites. Each one recomputes a statistic by direct enumeration, with no
//! code shared with the implementation path it checks.

/// Average precision by exhaustive threshold enumeration: build the
/// confusion matrix at every distinct score and accumulate step areas.
pub fn auprc_threshold_oracle(scores: &[f64], truth: &[bool]) -> f64 {
    let positives = truth.iter().filter(|t| **t).count();
    assert!(positives > 0, "oracle needs at least one positive");
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.reverse();

    let mut area = 0.0;
    let mut last_recall = 0.0;
    for threshold in thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (score, is_positive) in scores.iter().zip(truth) {
            if *score >= threshold {
                if *is_positive {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - last_recall) * precision;
        last_recall = recall;
    }
    area
}

/// Krippendorff's alpha by literally building the coincidence and
/// expectation matrices over the distinct-value index space.
pub fn alpha_coincidence_oracle(ratings: &[Vec<Option<f64>>], interval: bool) -> Option<f64> {
    let n_units = ratings.first().map(Vec::len)?;
    // Distinct-value index.
    let mut values: Vec<f64> = ratings.iter().flatten().filter_map(|v| *v).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let index_of = |v: f64| values.iter().position(|x| *x == v).unwrap();
    let v = values.len();
    if v == 0 {
        return None;
    }

    let mut coincidence = vec![vec![0.0f64; v]; v];
    let mut pairable_units = 0usize;
    for unit in 0..n_units {
        let unit_values: Vec<f64> = ratings.iter().filter_map(|row| row[unit]).collect();
        let m = unit_values.len();
        if m < 2 {
            continue;
        }
        pairable_units += 1;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    coincidence[index_of(unit_values[i])][index_of(unit_values[j])] +=
                        1.0 / (m as f64 - 1.0);
                }
            }
        }
    }
    if pairable_units < 2 {
        return None;
    }
    let n: f64 = coincidence.iter().flatten().sum();
    let marginals: Vec<f64> = (0..v).map(|i| coincidence[i].iter().sum()).collect();

    let delta_sq = |a: usize, b: usize| -> f64 {
        if interval {
            (values[a] - values[b]).powi(2)
        } else {
            f64::from(a != b)
        }
    };
    let mut observed = 0.0;
    let mut expected = 0.0;
    for a in 0..v {
        for b in 0..v {
            observed += coincidence[a][b] * delta_sq(a, b);
            expected += marginals[a] * marginals[b] * delta_sq(a, b);
        }
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    if d_e == 0.0 {
        return None;
    }
    Some(1.0 - d_o / d_e)
}

fn jt_statistic(groups: &[Vec<f64>]) -> f64 {
    let mut j = 0.0;
    for a in 0..groups.len() {
        for b in (a + 1)..groups.len() {
            for x in &groups[a] {
                for y in &groups[b] {
                    if x < y {
                        j += 1.0;
                    } else if x == y {
                        j += 0.5;
                    }
                }
            }
        }
    }
    j
}

/// Exact one-sided trend p-value by full enumeration of every assignment of
/// the pooled values to the group sizes. Exponential; only for tiny inputs.
pub fn jt_permutation_oracle(groups: &[Vec<f64>], increasing: bool) -> (f64, f64) {
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let observed = jt_statistic(groups);

    let n = pooled.len();
    let mut assignment = vec![usize::MAX; n];
    let mut favourable = 0u64;
    let mut total = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        pooled: &[f64],
        sizes: &[usize],
        group: usize,
        start: usize,
        left_in_group: usize,
        assignment: &mut Vec<usize>,
        observed: f64,
        increasing: bool,
        favourable: &mut u64,
        total: &mut u64,
    ) {
        if group == sizes.len() {
            let mut groups: Vec<Vec<f64>> = vec![Vec::new(); sizes.len()];
            for (idx, g) in assignment.iter().enumerate() {
                groups[*g].push(pooled[idx]);
            }
            let j = jt_statistic(&groups);
            *total += 1;
            let hit = if increasing {
                j >= observed - 1e-9
            } else {
                j <= observed + 1e-9
            };
            if hit {
                *favourable += 1;
            }
            return;
        }
        if left_in_group == 0 {
            recurse(
                pooled,
                sizes,
                group + 1,
                0,
                sizes.get(group + 1).copied().unwrap_or(0),
                assignment,
                observed,
                increasing,
                favourable,
                total,
            );
            return;
        }
        for idx in start..pooled.len() {
            if assignment[idx] != usize::MAX {
                continue;
            }
            assignment[idx] = group;
            recurse(
                pooled,
                sizes,
                group,
                idx + 1,
                left_in_group - 1,
                assignment,
                observed,
                increasing,
                favourable,
                total,
            );
            assignment[idx] = usize::MAX;
        }
    }

    recurse(
        &pooled,
        &sizes,
        0,
        0,
        sizes[0],
        &mut assignment,
        observed,
        increasing,
        &mut favourable,
        &mut total,
    );
    (observed, favourable as f64 / total as f64)
}
