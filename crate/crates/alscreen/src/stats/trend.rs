//! Ordered-trend statistics: the Jonckheere-Terpstra test for a monotone
//! trend across a-priori ordered groups, and the Pearson correlation slope
//! test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::special::{normal_cdf, t_cdf};

/// Direction of the one-sided trend alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendAlternative {
    Increasing,
    Decreasing,
}

/// Jonckheere-Terpstra test outcome. `z` always carries the tie-corrected
/// normal approximation; `p` is exact (full permutation enumeration) when the
/// pooled sample is small enough, otherwise from the approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JtResult {
    pub j: f64,
    pub z: f64,
    pub p: f64,
    /// True when `p` came from exact enumeration.
    pub exact: bool,
}

/// Pooled size at or below which the exact null distribution is used.
const EXACT_LIMIT: usize = 12;
/// Cap on enumerated assignments when ties force explicit enumeration.
const ENUMERATION_CAP: u64 = 5_000_000;

/// J = sum over ordered group pairs (i < j) of #{x in G_i, y in G_j : x < y}
/// plus half the ties.
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

/// Tie-corrected mean and variance of J under the null.
fn jt_moments(groups: &[Vec<f64>]) -> (f64, f64) {
    let n: usize = groups.iter().map(Vec::len).sum();
    let nf = n as f64;
    let sum_sq: f64 = groups.iter().map(|g| (g.len() * g.len()) as f64).sum();
    let mean = (nf * nf - sum_sq) / 4.0;

    // Tie group sizes over the pooled sample.
    let mut pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut tie_sizes = Vec::new();
    let mut run = 1usize;
    for i in 1..pooled.len() {
        if pooled[i] == pooled[i - 1] {
            run += 1;
        } else {
            tie_sizes.push(run as f64);
            run = 1;
        }
    }
    tie_sizes.push(run as f64);

    let sum3 = |values: &[f64], f: &dyn Fn(f64) -> f64| values.iter().map(|&v| f(v)).sum::<f64>();
    let group_sizes: Vec<f64> = groups.iter().map(|g| g.len() as f64).collect();

    let term1 = (nf * (nf - 1.0) * (2.0 * nf + 5.0)
        - sum3(&group_sizes, &|s| s * (s - 1.0) * (2.0 * s + 5.0))
        - sum3(&tie_sizes, &|t| t * (t - 1.0) * (2.0 * t + 5.0)))
        / 72.0;
    let term2 = if n > 2 {
        sum3(&group_sizes, &|s| s * (s - 1.0) * (s - 2.0))
            * sum3(&tie_sizes, &|t| t * (t - 1.0) * (t - 2.0))
            / (36.0 * nf * (nf - 1.0) * (nf - 2.0))
    } else {
        0.0
    };
    let term3 = sum3(&group_sizes, &|s| s * (s - 1.0)) * sum3(&tie_sizes, &|t| t * (t - 1.0))
        / (8.0 * nf * (nf - 1.0));

    (mean, term1 + term2 + term3)
}

/// Distribution of the two-sample Mann-Whitney count U(m, n) as unnormalized
/// arrangement counts indexed by u. Standard recurrence
/// f(m, n, u) = f(m-1, n, u-n) + f(m, n-1, u).
fn u_counts(m: usize, n: usize) -> Vec<f64> {
    // Full DP on (i, j): counts[i][j][u]; memory is tiny at this scale.
    let mut counts = vec![vec![vec![0.0f64; m * n + 1]; n + 1]; m + 1];
    for (i, plane) in counts.iter_mut().enumerate() {
        for (j, row) in plane.iter_mut().enumerate() {
            if i == 0 || j == 0 {
                row[0] = 1.0;
            }
        }
    }
    for i in 1..=m {
        for j in 1..=n {
            for u in 0..=(m * n) {
                let a = if u >= j { counts[i - 1][j][u - j] } else { 0.0 };
                let b = counts[i][j - 1][u];
                counts[i][j][u] = a + b;
            }
        }
    }
    counts[m][n].clone()
}

/// Exact null distribution of J for tie-free data: J decomposes into
/// independent Mann-Whitney counts U(n_1 + .. + n_{k-1}, n_k), so the
/// distribution is the convolution of their exact distributions.
fn exact_distribution_tie_free(sizes: &[usize]) -> Vec<f64> {
    let mut dist = vec![1.0f64];
    let mut left = sizes[0];
    for &size in &sizes[1..] {
        let counts = u_counts(left, size);
        let total: f64 = counts.iter().sum();
        let mut next = vec![0.0f64; dist.len() + counts.len() - 1];
        for (u, c) in counts.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let p = c / total;
            for (j, d) in dist.iter().enumerate() {
                next[j + u] += d * p;
            }
        }
        dist = next;
        left += size;
    }
    dist
}

fn multinomial(total: usize, sizes: &[usize]) -> u64 {
    let mut result: u128 = 1;
    let mut remaining = total;
    for &size in sizes {
        // C(remaining, size)
        let mut c: u128 = 1;
        for i in 0..size {
            c = c * (remaining - i) as u128 / (i + 1) as u128;
            if c > u128::from(u64::MAX) {
                return u64::MAX;
            }
        }
        result = result.saturating_mul(c);
        if result > u128::from(u64::MAX) {
            return u64::MAX;
        }
        remaining -= size;
    }
    result as u64
}

/// Exact tail probability by explicit enumeration of all assignments of the
/// pooled values to the group sizes. Used when ties are present.
fn exact_p_enumerated(pooled: &[f64], sizes: &[usize], j_obs: f64, alt: TrendAlternative) -> f64 {
    let n = pooled.len();
    let mut assignment = vec![usize::MAX; n];
    let mut favourable = 0u64;
    let mut total = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        pooled: &[f64],
        sizes: &[usize],
        group: usize,
        start_hint: usize,
        remaining_in_group: usize,
        assignment: &mut Vec<usize>,
        favourable: &mut u64,
        total: &mut u64,
        j_obs: f64,
        alt: TrendAlternative,
    ) {
        if group == sizes.len() {
            let mut groups: Vec<Vec<f64>> = vec![Vec::new(); sizes.len()];
            for (idx, &g) in assignment.iter().enumerate() {
                groups[g].push(pooled[idx]);
            }
            let j = jt_statistic(&groups);
            *total += 1;
            let hit = match alt {
                TrendAlternative::Increasing => j >= j_obs - 1e-9,
                TrendAlternative::Decreasing => j <= j_obs + 1e-9,
            };
            if hit {
                *favourable += 1;
            }
            return;
        }
        if remaining_in_group == 0 {
            recurse(
                pooled,
                sizes,
                group + 1,
                0,
                sizes.get(group + 1).copied().unwrap_or(0),
                assignment,
                favourable,
                total,
                j_obs,
                alt,
            );
            return;
        }
        // Choose indices in increasing order within a group to enumerate
        // each unordered assignment exactly once.
        for idx in start_hint..pooled.len() {
            if assignment[idx] != usize::MAX {
                continue;
            }
            assignment[idx] = group;
            recurse(
                pooled,
                sizes,
                group,
                idx + 1,
                remaining_in_group - 1,
                assignment,
                favourable,
                total,
                j_obs,
                alt,
            );
            assignment[idx] = usize::MAX;
        }
    }

    recurse(
        pooled,
        sizes,
        0,
        0,
        sizes[0],
        &mut assignment,
        &mut favourable,
        &mut total,
        j_obs,
        alt,
    );
    favourable as f64 / total as f64
}

/// Jonckheere-Terpstra trend test over a-priori ordered groups.
///
/// For pooled n <= 12 the p-value is exact: a convolution of exact
/// Mann-Whitney distributions when the pooled values are tie-free, or full
/// enumeration of assignments when ties are present (falling back to the
/// normal approximation only if the enumeration would exceed a fixed cap).
/// Larger samples use the tie-corrected normal approximation. Degenerate
/// inputs with zero variance report z = 0, p = 0.5.
pub fn jonckheere_terpstra(groups: &[Vec<f64>], alternative: TrendAlternative) -> Result<JtResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidInput(
            "trend test needs at least two groups".into(),
        ));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("empty group in trend test".into()));
    }
    let j = jt_statistic(groups);
    let (mean, variance) = jt_moments(groups);
    if variance <= 0.0 {
        // Degenerate data (e.g. all values identical) carries no trend
        // information; report the informationless midpoint.
        return Ok(JtResult {
            j,
            z: 0.0,
            p: 0.5,
            exact: false,
        });
    }
    let z = (j - mean) / variance.sqrt();

    let n: usize = groups.iter().map(Vec::len).sum();
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();

    if n <= EXACT_LIMIT {
        let mut pooled: Vec<f64> = groups.iter().flatten().copied().collect();
        pooled.sort_by(f64::total_cmp);
        let has_ties = pooled.windows(2).any(|w| w[0] == w[1]);
        if !has_ties {
            let dist = exact_distribution_tie_free(&sizes);
            let p = match alternative {
                TrendAlternative::Increasing => dist
                    .iter()
                    .enumerate()
                    .filter(|(u, _)| *u as f64 >= j - 1e-9)
                    .map(|(_, p)| p)
                    .sum(),
                TrendAlternative::Decreasing => dist
                    .iter()
                    .enumerate()
                    .filter(|(u, _)| *u as f64 <= j + 1e-9)
                    .map(|(_, p)| p)
                    .sum(),
            };
            return Ok(JtResult {
                j,
                z,
                p,
                exact: true,
            });
        }
        if multinomial(n, &sizes) <= ENUMERATION_CAP {
            let p = exact_p_enumerated(&pooled, &sizes, j, alternative);
            return Ok(JtResult {
                j,
                z,
                p,
                exact: true,
            });
        }
    }

    let p = match alternative {
        TrendAlternative::Increasing => 1.0 - normal_cdf(z),
        TrendAlternative::Decreasing => normal_cdf(z),
    };
    Ok(JtResult {
        j,
        z,
        p,
        exact: false,
    })
}

/// Pearson correlation with a two-sided slope test:
/// t = r sqrt((n-2) / (1-r²)) against a t distribution with n-2 degrees of
/// freedom. Errors on fewer than three points or zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: f64,
    pub p: f64,
}

pub fn pearson_trend(x: &[f64], y: &[f64]) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput(
            "correlation needs at least three points".into(),
        ));
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mean_x;
        let dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined(
            "correlation undefined: zero variance".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p = if 1.0 - r * r <= f64::EPSILON {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        2.0 * (1.0 - t_cdf(t.abs(), df))
    };
    Ok(PearsonResult { r, p })
}
