//! End-to-end contract tests for the `selstab` binary: exit codes, file
//! formats, and reproducibility from the echoed config.

use std::path::Path;
use std::process::{Command, Output};

fn selstab(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_selstab"));
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn selstab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth_small(dir: &Path) {
    let out = selstab(
        dir,
        &[
            "synth",
            "--m-per-class",
            "10",
            "--n",
            "60",
            "--planted",
            "8",
            "--effect",
            "2",
            "--seed",
            "7",
            "-o",
            "d.csv",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

const SMALL_CONFIG: &str = "\
dataset = d:d.csv
condition = d:control:treated
methods = sam, mrmr, geode
classifiers = ridge, svm
k_grid = 4, 8
seed = 7
n_trees = 25
";

fn run_small(dir: &Path, out_dir: &str, envs: &[(&str, &str)]) -> Output {
    std::fs::write(dir.join("cfg.txt"), SMALL_CONFIG).unwrap();
    selstab(dir, &["run", "cfg.txt", "-o", out_dir], envs)
}

#[test]
fn synth_is_deterministic_and_writes_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    let first = std::fs::read(tmp.path().join("d.csv")).unwrap();
    let sidecar = std::fs::read_to_string(tmp.path().join("d.csv.planted")).unwrap();
    assert!(sidecar.starts_with("index,feature\n"));
    assert_eq!(sidecar.lines().count(), 9); // header + 8 planted features
    assert!(sidecar.lines().nth(1).unwrap().contains("planted_"));

    // Header: sample_id,label,then 60 features; 20 sample rows.
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with("sample_id,label,"));

    synth_small(tmp.path());
    let second = std::fs::read(tmp.path().join("d.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn synth_missing_required_flag_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = selstab(tmp.path(), &["synth", "--n", "60", "-o", "d.csv"], &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn synth_invalid_spec_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = selstab(
        tmp.path(),
        &[
            "synth",
            "--m-per-class",
            "10",
            "--n",
            "10",
            "--planted",
            "30",
            "--effect",
            "2",
            "--seed",
            "1",
            "-o",
            "d.csv",
        ],
        &[],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn run_writes_contracted_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    let out = run_small(tmp.path(), "out", &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let stability = std::fs::read_to_string(tmp.path().join("out/stability.csv")).unwrap();
    assert!(stability.starts_with("condition,method,k,stab\n"));
    assert_eq!(stability.lines().count(), 1 + 3 * 2); // 3 methods x 2 k

    let accuracy = std::fs::read_to_string(tmp.path().join("out/accuracy.csv")).unwrap();
    assert!(accuracy.starts_with("condition,method,classifier,k,auc\n"));
    assert_eq!(accuracy.lines().count(), 1 + 3 * 2 * 2);

    let comparisons = std::fs::read_to_string(tmp.path().join("out/comparisons.csv")).unwrap();
    assert!(comparisons.starts_with("condition,family,group_a,group_b,mean_diff,p_adj,significant\n"));
    // 3 pairwise comparisons per family; families = stability + 2 classifiers.
    assert_eq!(comparisons.lines().count(), 1 + 3 * 3);

    let timings = std::fs::read_to_string(tmp.path().join("out/timings.csv")).unwrap();
    assert!(timings.starts_with("condition,method,k,millis\n"));
    assert_eq!(timings.lines().count(), 1 + 3 * 2);

    let summary = std::fs::read_to_string(tmp.path().join("out/summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(parsed["seed"], 7);
    assert!(parsed["config"].as_str().unwrap().contains("seed = 7"));
    assert_eq!(parsed["results"]["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn rerun_from_echoed_config_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    let out = run_small(tmp.path(), "out1", &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let summary = std::fs::read_to_string(tmp.path().join("out1/summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    let echoed = parsed["config"].as_str().unwrap();
    std::fs::write(tmp.path().join("echo.txt"), echoed).unwrap();
    let out = selstab(tmp.path(), &["run", "echo.txt", "-o", "out2"], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    for name in ["stability.csv", "accuracy.csv", "comparisons.csv", "summary.json"] {
        let a = std::fs::read(tmp.path().join("out1").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("out2").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs after rerun from echoed config");
    }
}

#[test]
fn run_oversized_k_exits_1_naming_k() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    let cfg = "dataset = d:d.csv\ncondition = d:control:treated\nk_grid = 4, 999\n";
    std::fs::write(tmp.path().join("cfg.txt"), cfg).unwrap();
    let out = selstab(tmp.path(), &["run", "cfg.txt", "-o", "out"], &[]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("999"), "{}", stderr(&out));
}

#[test]
fn run_config_parse_error_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.txt"), "dataset d.csv\n").unwrap();
    let out = selstab(tmp.path(), &["run", "cfg.txt", "-o", "out"], &[]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    std::fs::write(tmp.path().join("cfg.txt"), "unknown_key = 1\n").unwrap();
    let out = selstab(tmp.path(), &["run", "cfg.txt", "-o", "out"], &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn run_missing_dataset_file_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "dataset = d:nope.csv\ncondition = d:control:treated\n";
    std::fs::write(tmp.path().join("cfg.txt"), cfg).unwrap();
    let out = selstab(tmp.path(), &["run", "cfg.txt", "-o", "out"], &[]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn run_invalid_workers_env_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    let out = run_small(tmp.path(), "out", &[("SELSTAB_WORKERS", "zero")]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn report_emits_one_series_per_method() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path());
    let out = run_small(tmp.path(), "out", &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = selstab(
        tmp.path(),
        &["report", "out/summary.json", "--kind", "stability"],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().next().unwrap(), "condition,k,sam,mrmr,geode");
    assert_eq!(table.lines().count(), 1 + 2); // one row per k

    let out = selstab(
        tmp.path(),
        &["report", "out/summary.json", "--kind", "tukey", "-o", "t.csv"],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let tukey = std::fs::read_to_string(tmp.path().join("t.csv")).unwrap();
    assert!(tukey.starts_with("condition,family,comparison,direction,p_adj\n"));
}

#[test]
fn report_unknown_kind_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("s.json"), "{}").unwrap();
    let out = selstab(tmp.path(), &["report", "s.json", "--kind", "volcano"], &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn report_empty_or_missing_results_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.json"), "").unwrap();
    let out = selstab(tmp.path(), &["report", "empty.json", "--kind", "stability"], &[]);
    assert_eq!(code(&out), 1);

    let out = selstab(tmp.path(), &["report", "missing.json", "--kind", "stability"], &[]);
    assert_eq!(code(&out), 1);
}
