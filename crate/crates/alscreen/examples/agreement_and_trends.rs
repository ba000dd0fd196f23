//! The statistics battery: precision-recall analysis, inter-rater
//! reliability and trend tests.
//!
//! Run with: `cargo run --example agreement_and_trends`

use alscreen::stats::{
    auprc, f_beta, jonckheere_terpstra, krippendorff_alpha, pearson_trend, pr_curve, AlphaMetric,
    TrendAlternative,
};

fn main() -> alscreen::Result<()> {
    // Ranking quality on an imbalanced toy problem.
    let scores = [0.9, 0.8, 0.7, 0.6];
    let truth = [true, false, true, false];
    println!("pr curve points:");
    for point in pr_curve(&scores, &truth)? {
        println!(
            "  recall {:.2}  precision {:.3}",
            point.recall, point.precision
        );
    }
    println!("average precision = {:.4}", auprc(&scores, &truth)?);
    println!(
        "f0.5 = {:.3}, f2 = {:.3}",
        f_beta(0.8, 0.5, 0.5),
        f_beta(0.8, 0.5, 2.0)
    );

    // Chance-corrected agreement across raters, missing cells allowed.
    let ratings: Vec<Vec<Option<f64>>> = vec![
        vec![Some(10.0), Some(0.0), Some(8.0), Some(1.0), None],
        vec![Some(9.0), Some(1.0), Some(8.0), Some(2.0), Some(5.0)],
        vec![Some(10.0), Some(0.0), Some(6.0), Some(1.0), Some(6.0)],
    ];
    println!(
        "\nalpha (interval) = {:.3}, alpha (nominal) = {:.3}",
        krippendorff_alpha(&ratings, AlphaMetric::Interval)?,
        krippendorff_alpha(&ratings, AlphaMetric::Nominal)?,
    );

    // Monotone trend across a-priori ordered groups; exact permutation
    // p-values on small samples.
    let rising = vec![vec![0.2, 0.3], vec![0.4, 0.5], vec![0.7, 0.6]];
    let result = jonckheere_terpstra(&rising, TrendAlternative::Increasing)?;
    println!(
        "\ntrend test on {rising:?}: J = {}, p = {:.4}{}",
        result.j,
        result.p,
        if result.exact { " (exact)" } else { "" }
    );

    // Correlation with a slope test.
    let confidence = [6.1, 7.2, 5.4, 8.0, 7.5, 6.8, 8.3, 7.9];
    let improvement = [0.01, 0.03, -0.01, 0.05, 0.02, 0.01, 0.04, 0.03];
    let trend = pearson_trend(&confidence, &improvement)?;
    println!(
        "confidence vs improvement: r = {:.3}, two-sided p = {:.4}",
        trend.r, trend.p
    );
    Ok(())
}
