use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"{
  "geometry": {"kind": "ula", "m": 8},
  "ratios": [1.0, 2.0],
  "num_asfs": 1,
  "trials_per_asf": 2,
  "estimators": ["ml", "spice", "sample"],
  "escape_ms": [8, 16],
  "asf": {
    "spikes": [{"xi": -0.4, "c": 0.5}, {"xi": 0.5, "c": 0.5}],
    "kernels": [{"l": -0.1, "u": 0.2, "b": 1.0}]
  }
}"#;

fn covest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covest")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_reproducible_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), TINY);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let plots = dir.path().join("plots");
    let out = covest(&["run", "--config", s(&cfg), "--out", s(&a), "--plots", s(&plots), "--threads", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = covest(&["run", "--config", s(&cfg), "--out", s(&b), "--threads", "1"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("estimator,M,N,asf,trial,e_nf,e_gd,J,r_hat"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
    assert!(std::fs::read_to_string(plots.join("errors.svg")).unwrap().contains("<svg"));

    let replot = dir.path().join("replot");
    let out = covest(&["plot", "--in", s(&a), "--out", s(&replot)]);
    assert!(out.status.success());
    assert!(replot.join("errors.svg").exists());
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), TINY);
    let a = covest(&["run", "--config", s(&cfg), "--seed", "1"]);
    let b = covest(&["run", "--config", s(&cfg), "--seed", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn music_dump_has_all_sections() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), TINY);
    let out_path = dir.path().join("music.csv");
    let out = covest(&["music", "--config", s(&cfg), "--out", s(&out_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let count = |sec: &str| text.lines().filter(|l| l.starts_with(&format!("{sec},"))).count();
    assert_eq!(count("eigenvalue"), 8);
    assert_eq!(count("beta"), 8);
    assert_eq!(count("ccdf"), 8);
    assert_eq!(count("r_hat"), 1);
    assert_eq!(count("spectrum"), 80);
}

#[test]
fn theory_report_lists_ratios_and_escape_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), TINY);
    let out = covest(&["theory", "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut blocks = text.split("\n\n");
    assert_eq!(blocks.next().unwrap().lines().count(), 3);
    let escape = blocks.next().unwrap();
    assert!(escape.starts_with("m,n,seed,gap_ratio"));
    assert_eq!(escape.lines().count(), 1 + 2 * 2);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = config(dir.path(), r#"{"ratios": []}"#);
    assert_eq!(covest(&["run", "--config", s(&bad)]).status.code(), Some(2));
    let unknown = config(dir.path(), r#"{"no_such_field": 1}"#);
    assert_eq!(covest(&["theory", "--config", s(&unknown)]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(covest(&["run", "--config", s(&missing)]).status.code(), Some(3));
    let missing_csv = dir.path().join("missing.csv");
    assert_eq!(covest(&["plot", "--in", s(&missing_csv), "--out", s(dir.path())]).status.code(), Some(3));
}
