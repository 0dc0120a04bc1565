//! Acceptance criterion 9: full pipeline runs with the same config and
//! master seed produce byte-identical CSV/JSON outputs regardless of the
//! worker count. Prints one `criterion 9 (...): PASS` line.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn selstab(dir: &Path, args: &[&str], envs: &[(&str, &str)]) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_selstab"));
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn selstab");
    assert!(
        out.status.success(),
        "selstab {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn criterion_9_output_determinism() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    selstab(
        dir,
        &[
            "synth",
            "--m-per-class",
            "10",
            "--n",
            "120",
            "--planted",
            "10",
            "--effect",
            "2",
            "--seed",
            "11",
            "-o",
            "d.csv",
        ],
        &[],
    );
    let config = "\
dataset = d:d.csv
condition = d:control:treated
methods = sam, mrmr, geode
classifiers = rf, svm, ridge, lasso
k_grid = 4, 12, 24
seed = 11
n_trees = 50
";
    std::fs::write(dir.join("cfg.txt"), config).unwrap();

    // Same config and seed under three worker regimes, twice for the
    // default pool to cover run-to-run variation as well.
    let regimes: [(&str, &[(&str, &str)]); 4] = [
        ("default", &[]),
        ("default-again", &[]),
        ("serial", &[("SELSTAB_WORKERS", "1")]),
        ("three-workers", &[("SELSTAB_WORKERS", "3")]),
    ];
    let files = ["stability.csv", "accuracy.csv", "comparisons.csv", "summary.json"];
    let mut baseline: Option<Vec<Vec<u8>>> = None;
    for (label, envs) in regimes {
        let out_dir = format!("out-{label}");
        selstab(dir, &["run", "cfg.txt", "-o", &out_dir], envs);
        let contents: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(dir.join(&out_dir).join(f)).unwrap())
            .collect();
        match &baseline {
            None => baseline = Some(contents),
            Some(base) => {
                for (f, (a, b)) in files.iter().zip(base.iter().zip(&contents)) {
                    if a != b {
                        println!("criterion 9 (output determinism): FAIL [{f} differs under {label}]");
                        panic!("criterion 9 failed: {f} differs under {label}");
                    }
                }
            }
        }
    }
    println!(
        "criterion 9 (output determinism): PASS [{:.2?}]",
        started.elapsed()
    );
}
