//! Rendering of the run summary and the plot-ready output files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotator::TeamScheme;
use crate::error::Result;
use crate::io::{
    self, format_float, write_batches_csv, write_labels_csv, write_round_summary_csv, write_string,
    write_transformed_csv, LabelRow, RoundSummaryRow,
};
use crate::labels::ReclassifyMode;

use super::{Analyses, ExperimentConfig, ExperimentResult, LabelMode, ReplicateResult};

/// Everything the standalone `metrics`/`report` commands need to interpret a
/// run directory without the original config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub seed: u64,
    pub n_rounds: u32,
    pub replicates: u32,
    pub query_mode: LabelMode,
    pub reclassify_mode: ReclassifyMode,
    pub f_betas: Vec<f64>,
    pub teams: Vec<TeamScheme>,
}

impl RunManifest {
    pub fn of(config: &ExperimentConfig) -> Self {
        RunManifest {
            version: 1,
            seed: config.seed,
            n_rounds: config.n_rounds,
            replicates: config.replicates,
            query_mode: config.query_mode,
            reclassify_mode: config.reclassify_mode,
            f_betas: config.f_betas.clone(),
            teams: config.teams.clone(),
        }
    }
}

pub fn replicate_dir(root: &Path, replicate: u32) -> std::path::PathBuf {
    root.join(format!("rep{replicate:03}"))
}

pub fn team_dir(root: &Path, replicate: u32, model_id: &str) -> std::path::PathBuf {
    replicate_dir(root, replicate).join(format!("team-{model_id}"))
}

/// Write the complete run directory: manifest, per-team round logs, final
/// models (first replicate), metrics JSON, figure CSVs and the report.
pub fn write_outputs(result: &ExperimentResult) -> Result<()> {
    let root = &result.config.output_dir;
    fs::create_dir_all(root)?;
    write_string(
        &root.join("manifest.json"),
        &serde_json::to_string_pretty(&RunManifest::of(&result.config))?,
    )?;

    for replicate in &result.replicates {
        write_replicate_outputs(&result.config, replicate)?;
    }

    write_string(&root.join("metrics.json"), &metrics_json(&result.analyses)?)?;
    write_figures(root, &result.analyses)?;
    write_string(&root.join("report.md"), &render_report(&result.analyses))?;
    Ok(())
}

fn write_replicate_outputs(config: &ExperimentConfig, replicate: &ReplicateResult) -> Result<()> {
    // Replay-ready combined label file: initializer rows plus every team's
    // raw labels.
    let rep_dir = replicate_dir(&config.output_dir, replicate.replicate);
    fs::create_dir_all(&rep_dir)?;
    write_labels_csv(
        &rep_dir.join("labels_raw.csv"),
        &super::replicate_label_rows(replicate),
    )?;

    for team in &replicate.teams {
        let dir = team_dir(
            &config.output_dir,
            replicate.replicate,
            &team.scheme.model_id,
        );
        fs::create_dir_all(&dir)?;

        let mut raw_rows = Vec::new();
        let mut resolved_rows = Vec::new();
        let mut transformed_rows = Vec::new();
        let mut summary_rows = Vec::new();
        // Round 0: the initializer-only baseline, metrics columns only.
        summary_rows.push(RoundSummaryRow {
            round: 0,
            hrq_count: 0,
            uq_count: 0,
            rq_count: 0,
            hrq_true_rate: 0.0,
            metrics: team.initial_metrics.clone(),
        });
        for log in &team.rounds {
            for label in &log.labels {
                raw_rows.push(LabelRow::new(&team.scheme.model_id, label));
            }
            for label in &log.resolved {
                resolved_rows.push(LabelRow::new(&team.scheme.model_id, label));
            }
            for label in &log.transformed {
                transformed_rows.push((log.round, label));
            }
            summary_rows.push(RoundSummaryRow {
                round: log.round,
                hrq_count: log.batch.hrq_ids.len(),
                uq_count: log.batch.uq_ids.len(),
                rq_count: log.batch.rq_ids.len(),
                hrq_true_rate: log.hrq_true_rate,
                metrics: log.model_metrics.clone(),
            });
        }
        write_labels_csv(&dir.join("labels_raw.csv"), &raw_rows)?;
        write_labels_csv(&dir.join("labels_resolved.csv"), &resolved_rows)?;
        write_transformed_csv(&dir.join("transformed.csv"), &transformed_rows)?;
        write_batches_csv(&dir.join("batches.csv"), &team.batch_rows)?;
        write_round_summary_csv(&dir.join("rounds.csv"), &summary_rows)?;
        write_string(
            &dir.join("digests.json"),
            &serde_json::to_string_pretty(&team.model_digests)?,
        )?;
        if config.write_models && replicate.replicate == 0 {
            write_string(
                &dir.join("model_binary.json"),
                &team.final_binary.to_json()?,
            )?;
            write_string(
                &dir.join("model_multiclass.json"),
                &team.final_multiclass.to_json()?,
            )?;
        }
    }
    Ok(())
}

/// Deterministic metrics JSON (ordered maps, ordered vectors).
pub fn metrics_json(analyses: &Analyses) -> Result<String> {
    Ok(serde_json::to_string_pretty(analyses)?)
}

fn write_figures(root: &Path, analyses: &Analyses) -> Result<()> {
    let figures = root.join("figures");
    fs::create_dir_all(&figures)?;

    // Average-precision trajectories per team and mode.
    let mut lines = vec!["team,mode,round,mean_auprc".to_string()];
    for team in &analyses.teams {
        for (mode, values) in &team.mean_auprc_by_round {
            for (i, value) in values.iter().enumerate() {
                lines.push(format!(
                    "{},{},{},{}",
                    team.model_id,
                    mode,
                    i + 1,
                    format_float(*value)
                ));
            }
        }
    }
    write_string(
        &figures.join("auprc_trajectories.csv"),
        &(lines.join("\n") + "\n"),
    )?;

    // HRQ true-rate trend, per replicate.
    let mut lines = vec!["round,replicate,team_mean_rate".to_string()];
    for (round_index, rates) in analyses.hrq_rate.per_round_per_replicate.iter().enumerate() {
        for (replicate, rate) in rates.iter().enumerate() {
            lines.push(format!(
                "{},{replicate},{}",
                round_index + 1,
                format_float(*rate)
            ));
        }
    }
    write_string(
        &figures.join("hrq_true_rate.csv"),
        &(lines.join("\n") + "\n"),
    )?;

    if let Some(alpha) = &analyses.group_alpha {
        let mut lines = vec!["round,sample,alpha".to_string()];
        for (round_index, values) in alpha.per_round_values.iter().enumerate() {
            for (sample, value) in values.iter().enumerate() {
                lines.push(format!(
                    "{},{sample},{}",
                    round_index + 1,
                    format_float(*value)
                ));
            }
        }
        write_string(&figures.join("group_alpha.csv"), &(lines.join("\n") + "\n"))?;
    }

    // Per-replicate confidence-vs-improvement correlations per team.
    let mut lines = vec!["team,replicate,pearson_r".to_string()];
    for team in &analyses.teams {
        for (replicate, r) in team.confidence_trend.per_replicate_r.iter().enumerate() {
            let value = r.map(format_float).unwrap_or_default();
            lines.push(format!("{},{replicate},{value}", team.model_id));
        }
    }
    write_string(
        &figures.join("confidence_vs_improvement.csv"),
        &(lines.join("\n") + "\n"),
    )?;

    // Confidence by slot among 1-labels.
    let mut lines = vec!["slot,n,mean_confidence,sd_confidence".to_string()];
    for (slot, stat) in [
        ("HRQ", &analyses.slot_confidence.hrq_true),
        ("UQ", &analyses.slot_confidence.uq_true),
    ] {
        if let Some(stat) = stat {
            lines.push(format!(
                "{slot},{},{},{}",
                stat.n,
                format_float(stat.mean),
                format_float(stat.sd)
            ));
        }
    }
    write_string(
        &figures.join("slot_confidence.csv"),
        &(lines.join("\n") + "\n"),
    )?;
    Ok(())
}

fn fmt3(value: f64) -> String {
    format!("{value:.3}")
}

/// Human-readable run summary in markdown.
pub fn render_report(analyses: &Analyses) -> String {
    let mut out = String::new();
    out.push_str("# Active-learning run summary\n\n");
    out.push_str(&format!(
        "seed {} | {} rounds | {} replicates | query driver: {}\n\n",
        analyses.seed,
        analyses.n_rounds,
        analyses.replicates,
        analyses.query_mode.prefix()
    ));

    out.push_str("## Model performance by team (mean average precision per round)\n\n");
    for team in &analyses.teams {
        out.push_str(&format!("### Team {} ({:?})\n\n", team.model_id, team.kind));
        out.push_str("| round |");
        for mode in team.mean_auprc_by_round.keys() {
            out.push_str(&format!(" {mode} |"));
        }
        out.push_str("\n|---|");
        for _ in team.mean_auprc_by_round.keys() {
            out.push_str("---|");
        }
        out.push('\n');
        for round_index in 0..analyses.n_rounds as usize {
            out.push_str(&format!("| {} |", round_index + 1));
            for values in team.mean_auprc_by_round.values() {
                let cell = values
                    .get(round_index)
                    .map(|v| fmt3(*v))
                    .unwrap_or_default();
                out.push_str(&format!(" {cell} |"));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "\nfinal multiclass >= binary in {}/{} replicates\n\n",
            team.multiclass_geq_binary_final, analyses.replicates
        ));
    }

    out.push_str("## HRQ agreement trend\n\n");
    out.push_str(&format!(
        "per-round mean true rate: [{}]\n",
        analyses
            .hrq_rate
            .per_round_mean
            .iter()
            .map(|v| fmt3(*v))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    match &analyses.hrq_rate.jt_increasing {
        Some(jt) => out.push_str(&format!(
            "trend test (increasing): J = {:.1}, z = {:.3}, p = {}{}\n\n",
            jt.j,
            jt.z,
            format_float(jt.p),
            if jt.exact { " (exact)" } else { "" }
        )),
        None => out.push_str("trend test: not applicable\n\n"),
    }

    out.push_str("## Group agreement\n\n");
    match &analyses.group_alpha {
        Some(alpha) => {
            out.push_str(&format!(
                "per-round mean alpha: [{}]\n",
                alpha
                    .per_round_mean
                    .iter()
                    .map(|v| fmt3(*v))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            match &alpha.jt_decreasing_on_means {
                Some(jt) => out.push_str(&format!(
                    "trend test (decreasing): J = {:.1}, z = {:.3}, p = {}{}\n\n",
                    jt.j,
                    jt.z,
                    format_float(jt.p),
                    if jt.exact { " (exact)" } else { "" }
                )),
                None => out.push_str("trend test: not applicable\n\n"),
            }
        }
        None => out.push_str("no group team in this run\n\n"),
    }

    out.push_str("## Confidence vs next-round improvement\n\n");
    for team in &analyses.teams {
        let trend = &team.confidence_trend;
        let mean_r = trend.mean_r.map(fmt3).unwrap_or_else(|| "n/a".into());
        out.push_str(&format!(
            "- team {}: mean r = {mean_r}, r >= 0 in {}/{} defined replicates\n",
            team.model_id, trend.nonnegative_count, trend.defined_count
        ));
    }
    out.push('\n');

    out.push_str("## Confidence by query slot (1-labels)\n\n");
    for (slot, stat) in [
        ("HRQ", &analyses.slot_confidence.hrq_true),
        ("UQ", &analyses.slot_confidence.uq_true),
    ] {
        match stat {
            Some(stat) => out.push_str(&format!(
                "- {slot}: n = {}, mean = {}, sd = {}\n",
                stat.n,
                fmt3(stat.mean),
                fmt3(stat.sd)
            )),
            None => out.push_str(&format!("- {slot}: no 1-labels\n")),
        }
    }
    out.push('\n');
    out.push_str("Plot-ready data files live under figures/.\n");
    out
}

/// Reconstruct the analysis inputs from a run directory (the `metrics`
/// command path).
pub fn read_run_rounds(root: &Path) -> Result<(RunManifest, Vec<Vec<super::TeamRounds>>)> {
    let manifest: RunManifest =
        serde_json::from_str(&io::read_string(&root.join("manifest.json"))?)?;
    let mut replicates = Vec::new();
    for replicate in 0..manifest.replicates {
        let mut teams = Vec::new();
        for scheme in &manifest.teams {
            let dir = team_dir(root, replicate, &scheme.model_id);
            let batches = io::batches_from_rows(&io::read_batches_csv(&dir.join("batches.csv"))?)?;
            let raw: Vec<_> = io::read_labels_csv(&dir.join("labels_raw.csv"))?;
            let resolved: Vec<_> = io::read_labels_csv(&dir.join("labels_resolved.csv"))?;
            let transformed = io::read_transformed_csv(&dir.join("transformed.csv"))?;
            let summaries = io::read_round_summary_csv(&dir.join("rounds.csv"))?;
            let initial_metrics = summaries
                .iter()
                .find(|s| s.round == 0)
                .map(|s| s.metrics.clone())
                .unwrap_or_default();
            let mut rounds = Vec::new();
            for batch in batches {
                let round = batch.round;
                let summary = summaries.iter().find(|s| s.round == round).ok_or_else(|| {
                    crate::error::Error::InvalidInput(format!("rounds.csv missing round {round}"))
                })?;
                rounds.push(crate::data::RoundLog {
                    round,
                    batch,
                    labels: raw
                        .iter()
                        .filter(|r| r.round == round)
                        .map(|r| r.clone().into_label())
                        .collect(),
                    resolved: resolved
                        .iter()
                        .filter(|r| r.round == round)
                        .map(|r| r.clone().into_label())
                        .collect(),
                    transformed: transformed
                        .iter()
                        .filter(|t| t.round == round)
                        .map(|t| crate::data::MulticlassLabel {
                            instance_id: crate::data::InstanceId(t.instance_id.clone()),
                            pseudo_class: t.pseudo_class,
                        })
                        .collect(),
                    model_metrics: summary.metrics.clone(),
                    hrq_true_rate: summary.hrq_true_rate,
                });
            }
            teams.push(super::TeamRounds {
                scheme: scheme.clone(),
                initial_metrics,
                rounds,
            });
        }
        replicates.push(teams);
    }
    Ok((manifest, replicates))
}
