//! End-to-end checks of the command-line surface: every subcommand, file
//! outputs, determinism and exit codes.

use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alscreen"))
}

const SMALL_CONFIG: &str = r#"
version = 1
seed = 99
n_rounds = 2
init_size = 60
replicates = 1
eval_size = 300
output_dir = "OUT_DIR"

[generator]
seed = 3
n_records = 500
anomaly_rate = 0.08

[binary_learner]
n_boosting_rounds = 15
class_count = 2

[multiclass_learner]
n_boosting_rounds = 15
learning_rate = 0.05
max_depth = 2
min_samples_leaf = 10
class_count = 11

[[annotators]]
annotator_id = "a1"
skill = 0.9
confidence_noise_sd = 0.5
seed = 5

[[annotators]]
annotator_id = "a2"
skill = 0.7
seed = 6

[[annotators]]
annotator_id = "a3"
skill = 0.6
seed = 7

[[teams]]
kind = "individual"
annotator_ids = ["a1"]
model_id = "B"

[[teams]]
kind = "group"
annotator_ids = ["a1", "a2", "a3"]
model_id = "A"
group_threshold = 2
"#;

fn write_config(dir: &Path, out_dir: &Path) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    let text = SMALL_CONFIG.replace("OUT_DIR", &out_dir.display().to_string());
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn gen_corpus_writes_both_copies_and_difficulties() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &dir.path().join("out"));
    let corpus_dir = dir.path().join("corpus");
    let status = binary()
        .args(["gen-corpus", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(&corpus_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let records = std::fs::read_to_string(corpus_dir.join("records.csv")).unwrap();
    assert!(records.lines().next().unwrap().contains("ground_truth"));
    assert_eq!(records.lines().count(), 501);
    let blinded = std::fs::read_to_string(corpus_dir.join("records_blinded.csv")).unwrap();
    assert!(!blinded.lines().next().unwrap().contains("ground_truth"));
    assert!(corpus_dir.join("difficulties.csv").exists());
}

#[test]
fn run_metrics_report_and_replay_roundtrip() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &out);

    let status = binary()
        .args(["run", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());

    // Structural outputs.
    assert!(out.join("manifest.json").exists());
    assert!(out.join("metrics.json").exists());
    assert!(out.join("report.md").exists());
    assert!(out.join("figures/auprc_trajectories.csv").exists());
    assert!(out.join("figures/hrq_true_rate.csv").exists());
    assert!(out.join("figures/group_alpha.csv").exists());
    for team in ["B", "A"] {
        let team_dir = out.join("rep000").join(format!("team-{team}"));
        for file in [
            "rounds.csv",
            "batches.csv",
            "labels_raw.csv",
            "labels_resolved.csv",
            "transformed.csv",
            "digests.json",
            "model_binary.json",
            "model_multiclass.json",
        ] {
            assert!(team_dir.join(file).exists(), "missing {team}/{file}");
        }
    }
    let batches = std::fs::read_to_string(out.join("rep000/team-B/batches.csv")).unwrap();
    assert!(batches.starts_with("round,slot,instance_id,anomaly_score,uncertainty"));
    assert!(batches.contains("HRQ"));
    assert!(batches.contains("UQ"));
    assert!(batches.contains("RQ"));

    // `metrics` recomputes the same analyses from the round logs.
    let produced = std::fs::read_to_string(out.join("metrics.json")).unwrap();
    let recomputed_path = dir.path().join("recomputed.json");
    let status = binary()
        .args(["metrics", "--run-dir"])
        .arg(&out)
        .arg("--out")
        .arg(&recomputed_path)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(produced, std::fs::read_to_string(&recomputed_path).unwrap());

    // `report` re-renders the same report from metrics.json.
    let report = std::fs::read_to_string(out.join("report.md")).unwrap();
    let rerendered_path = dir.path().join("report2.md");
    let status = binary()
        .args(["report", "--run-dir"])
        .arg(&out)
        .arg("--out")
        .arg(&rerendered_path)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(report, std::fs::read_to_string(&rerendered_path).unwrap());

    // `replay` consumes the recorded labels and reproduces the run.
    let replay_out = dir.path().join("replayed");
    let status = binary()
        .args(["replay", "--config"])
        .arg(&config)
        .arg("--labels")
        .arg(out.join("rep000/labels_raw.csv"))
        .arg("--output-dir")
        .arg(&replay_out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read_to_string(out.join("rep000/team-B/rounds.csv")).unwrap(),
        std::fs::read_to_string(replay_out.join("rep000/team-B/rounds.csv")).unwrap(),
    );
    assert_eq!(
        produced,
        std::fs::read_to_string(replay_out.join("metrics.json")).unwrap()
    );
}

#[test]
fn rerunning_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let config = write_config(dir.path(), &out_a);
    assert!(binary()
        .args(["run", "--config"])
        .arg(&config)
        .status()
        .unwrap()
        .success());
    assert!(binary()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--output-dir")
        .arg(&out_b)
        .status()
        .unwrap()
        .success());
    for file in ["metrics.json", "report.md"] {
        assert_eq!(
            std::fs::read(out_a.join(file)).unwrap(),
            std::fs::read(out_b.join(file)).unwrap(),
            "{file} differs between identical runs"
        );
    }
}

#[test]
fn config_errors_exit_one_and_runtime_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    // Invalidate the config: anomaly rate out of range.
    let bad = SMALL_CONFIG.replace("anomaly_rate = 0.08", "anomaly_rate = 0.8");
    let bad_path = dir.path().join("bad.toml");
    std::fs::write(&bad_path, bad.replace("OUT_DIR", "out")).unwrap();
    let status = binary()
        .args(["run", "--config"])
        .arg(&bad_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Runtime error: missing run directory.
    let status = binary()
        .args(["metrics", "--run-dir"])
        .arg(dir.path().join("nonexistent"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Config parse error (invalid TOML).
    std::fs::write(dir.path().join("broken.toml"), "this is not toml [").unwrap();
    let status = binary()
        .args(["run", "--config"])
        .arg(dir.path().join("broken.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
