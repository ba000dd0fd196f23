//! Thin CLI over the library: corpus generation, experiment runs, metric
//! aggregation, report rendering and label replay. Exit codes: 0 success,
//! 1 configuration error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use alscreen::experiment::report::{metrics_json, read_run_rounds, render_report, write_outputs};
use alscreen::experiment::{
    analyze_rounds, run_replicate, ExperimentConfig, ExperimentResult, ReplayLabels,
    ReplicateInputs,
};
use alscreen::io;
use alscreen::synth::generate_corpus;
use alscreen::{Error, Result};

#[derive(Parser)]
#[command(
    name = "alscreen",
    version,
    about = "Confidence-aware batch active learning for email anomaly screening"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus: evaluation and blinded record
    /// CSVs plus per-record difficulty scores.
    GenCorpus {
        /// Experiment config TOML; the [generator] section drives this.
        #[arg(long)]
        config: PathBuf,
        /// Directory for records.csv, records_blinded.csv, difficulties.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the full experiment with simulated annotators.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Recompute the metrics JSON from a run directory's round logs.
    Metrics {
        #[arg(long)]
        run_dir: PathBuf,
        /// Output path; defaults to <run_dir>/metrics.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the markdown report from a run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
        /// Output path; defaults to <run_dir>/report.md.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run one replicate consuming labels from a recorded raw-label CSV
    /// instead of the simulator (the entry point for real analyst labels).
    Replay {
        #[arg(long)]
        config: PathBuf,
        /// Raw label CSV (the labels_raw.csv format).
        #[arg(long)]
        labels: PathBuf,
        /// Replicate index the labels were recorded against.
        #[arg(long, default_value_t = 0)]
        replicate: u32,
        /// Optional working-corpus override (evaluation copy with
        /// ground_truth).
        #[arg(long)]
        records: Option<PathBuf>,
        /// Difficulty CSV matching --records.
        #[arg(long)]
        difficulties: Option<PathBuf>,
        /// Optional held-out evaluation corpus override.
        #[arg(long)]
        eval_records: Option<PathBuf>,
        /// Override the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            if error.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenCorpus { config, out_dir } => {
            let config = ExperimentConfig::from_toml_path(&config)?;
            let (records, difficulties) = generate_corpus(&config.generator)?;
            std::fs::create_dir_all(&out_dir)?;
            io::write_records_csv(&out_dir.join("records.csv"), &records, true)?;
            io::write_records_csv(&out_dir.join("records_blinded.csv"), &records, false)?;
            io::write_difficulties_csv(&out_dir.join("difficulties.csv"), &difficulties)?;
            println!(
                "wrote {} records ({} anomalous) to {}",
                records.len(),
                records.iter().filter(|r| r.ground_truth).count(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Run { config, output_dir } => {
            let mut config = ExperimentConfig::from_toml_path(&config)?;
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            let result = alscreen::experiment::run_experiment(&config)?;
            write_outputs(&result)?;
            println!("run complete: {}", config.output_dir.display());
            Ok(())
        }
        Command::Metrics { run_dir, out } => {
            let (manifest, replicates) = read_run_rounds(&run_dir)?;
            let analyses = analyze_rounds(
                manifest.seed,
                manifest.n_rounds,
                manifest.query_mode,
                &replicates,
            );
            let path = out.unwrap_or_else(|| run_dir.join("metrics.json"));
            io::write_string(&path, &metrics_json(&analyses)?)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Report { run_dir, out } => {
            let analyses: alscreen::experiment::Analyses =
                serde_json::from_str(&io::read_string(&run_dir.join("metrics.json"))?)
                    .map_err(Error::from)?;
            let path = out.unwrap_or_else(|| run_dir.join("report.md"));
            io::write_string(&path, &render_report(&analyses))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Replay {
            config,
            labels,
            replicate,
            records,
            difficulties,
            eval_records,
            output_dir,
        } => {
            let mut config = ExperimentConfig::from_toml_path(&config)?;
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            let mut inputs = ReplicateInputs::generate(&config, replicate)?;
            if let Some(path) = records {
                let (loaded, has_truth) = io::read_records_csv(&path)?;
                if !has_truth {
                    return Err(Error::Config(
                        "replay needs the evaluation copy (with ground_truth)".into(),
                    ));
                }
                inputs.records = loaded;
            }
            if let Some(path) = difficulties {
                inputs.difficulties = io::read_difficulties_csv(&path)?;
            }
            if let Some(path) = eval_records {
                let (loaded, _) = io::read_records_csv(&path)?;
                inputs.eval_records = loaded;
            }
            let rows = io::read_labels_csv(&labels)?;
            let mut source = ReplayLabels::from_rows(&rows);
            let replicate_result = run_replicate(&config, replicate, &inputs, &mut source)?;
            let replicates = vec![replicate_result];
            let analyses = alscreen::experiment::analyze(&config, &replicates);
            let result = ExperimentResult {
                config: config.clone(),
                replicates,
                analyses,
            };
            write_outputs(&result)?;
            println!("replay complete: {}", config.output_dir.display());
            Ok(())
        }
    }
}
