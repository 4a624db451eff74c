//! End-to-end checks of the binary: exit codes, file formats, and CSV
//! determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aligned-init"))
}

/// Workspace-level data directory; integration tests run from the crate
/// root, not the workspace root.
fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_and_check_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["w.csv", "w.bin"] {
        let path = dir.path().join(name);
        let path = path.to_str().unwrap();
        let gen = run(&["--seed", "11", "--out", path, "gen", "6", "9"]);
        assert!(gen.status.success(), "gen failed: {gen:?}");
        let check = run(&["check", path]);
        assert_eq!(check.status.code(), Some(0), "check failed: {check:?}");
        let report = stdout(&check);
        assert!(report.contains("\"passes\": true"), "{report}");
    }
}

#[test]
fn check_rejects_unaligned_matrices_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("he.csv");
    let path = path.to_str().unwrap();
    let gen = run(&["--seed", "3", "--out", path, "gen", "6", "9", "he"]);
    assert!(gen.status.success());
    let check = run(&["check", path]);
    assert_eq!(check.status.code(), Some(1));
    assert!(stdout(&check).contains("\"passes\": false"));
}

#[test]
fn shrinking_aligned_draws_are_rejected_as_usage() {
    let out = run(&["gen", "5", "3", "alg1"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let out = run(&["gen", "4", "4", "nosuch"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_row_draw_is_the_normalized_ones_vector() {
    let out = run(&["gen", "1", "4", "alg2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "0.5,0.5,0.5,0.5\n");
}

#[test]
fn binary_format_is_sniffed_regardless_of_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disguised.csv");
    let path = path.to_str().unwrap();
    let gen = run(&["--out", path, "gen", "4", "7", "alg1", "--format", "bin"]);
    assert!(gen.status.success());
    let check = run(&["check", path]);
    assert_eq!(check.status.code(), Some(0), "{check:?}");
}

#[test]
fn propagate_emits_one_row_per_layer() {
    let out = run(&["stats", "propagate", "--widths", "32x4", "--mu", "2", "--sigma", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "{text}");
    assert!(lines[0].starts_with("schema_version,"));
    // First layer: alpha = mu / sigma at constant width.
    assert!(lines[1].contains(",1,32,2,1,2,"));
}

#[test]
fn clt_rows_include_per_draw_and_mean_entries() {
    let out = run(&[
        "stats", "clt", "--dims", "5,10", "--draws", "2", "--samples", "2000",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 2 * 3, "{text}");
    assert_eq!(text.matches(",mean,").count(), 2);
}

#[test]
fn empty_grid_lists_are_usage_errors() {
    let data = data_dir();
    let data = data.to_str().unwrap();
    let out = run(&["--data-dir", data, "bench", "depth", "--depths", ","]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let out = run(&["--data-dir", data, "bench", "tabular", "--alphas", " , "]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_image_dataset_is_a_usage_error() {
    let data = data_dir();
    let out = bin()
        .args(["bench", "depth", "--dataset", "nosuch", "--depths", "2"])
        .env("ALIGNED_INIT_DATA", data.as_os_str())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn bench_csv_is_deterministic_modulo_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_dir();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = bin()
            .args([
                "--seed", "5", "--trials", "2",
                "--out", path.to_str().unwrap(),
                "bench", "depth",
                "--depths", "2", "--inits", "alg2",
                "--epochs", "1", "--subset", "400",
            ])
            .env("ALIGNED_INIT_DATA", data.as_os_str())
            .output()
            .unwrap();
        assert!(out.status.success(), "{out:?}");
        outputs.push(strip_wall(&std::fs::read_to_string(path).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    // Sanity: per-trial rows carry values, the aggregate row carries a std.
    assert_eq!(outputs[0].lines().count(), 1 + 3);
}

/// Drop the trailing wall_ms field from every CSV line.
fn strip_wall(text: &str) -> String {
    text.lines()
        .map(|l| &l[..l.rfind(',').unwrap()])
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn dataset_fallback_is_reported_on_stderr() {
    let data = data_dir();
    let out = bin()
        .args([
            "--trials", "1", "bench", "depth",
            "--dataset", "mnist", "--depths", "2",
            "--epochs", "1", "--subset", "300",
        ])
        .env("ALIGNED_INIT_DATA", data.as_os_str())
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("using bundled digits"), "{err}");
    // The fallback is also visible in the dataset column.
    assert!(stdout(&out).contains(",digits,"));
}
