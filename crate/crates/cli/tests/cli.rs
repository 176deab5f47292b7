//! End-to-end tests of the `ramol` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ramol() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ramol"))
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const TWO_BLOBS: &str = r#"
[[regime]]
id = "stationary"
length = 1500
[[regime.class]]
prior = 0.5
[[regime.class.component]]
mean = [-1.0, 0.0]
[[regime.class]]
prior = 0.5
[[regime.class.component]]
mean = [1.0, 0.0]
"#;

fn run_dir(out_root: &Path) -> PathBuf {
    let mut dirs: Vec<_> = std::fs::read_dir(out_root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    dirs.sort();
    assert_eq!(dirs.len(), 1, "expected exactly one run dir in {out_root:?}");
    dirs.pop().unwrap()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn run_writes_metrics_curves_params_and_aggregate() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let out_root = tmp.path().join("runs");
    let out = ramol()
        .args([
            "run",
            "--synthetic",
            spec.to_str().unwrap(),
            "--variant",
            "ram_gated",
            "--seeds",
            "1,2,3",
            "--buffer",
            "100",
            "--drift-samples",
            "500",
            "--dump-buffer",
            "--out",
            out_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_success(&out);
    let dir = run_dir(&out_root);
    for seed in 1..=3 {
        assert!(dir.join(format!("metrics-seed{seed}.json")).exists());
        assert!(dir.join(format!("curve-seed{seed}.csv")).exists());
        assert!(dir.join(format!("params-seed{seed}.json")).exists());
        assert!(dir.join(format!("regret-seed{seed}.json")).exists());
        assert!(dir.join(format!("buffer-seed{seed}.json")).exists());
    }
    let aggregate: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("aggregate.json")).unwrap())
            .unwrap();
    assert_eq!(aggregate["n_runs"], 3);
    let curve = std::fs::read_to_string(dir.join("curve-seed1.csv")).unwrap();
    assert!(curve.starts_with("step,correct,window_acc"));
    assert_eq!(curve.lines().count(), 1501);
}

#[test]
fn manifest_reproduces_metric_scalars_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let first_root = tmp.path().join("first");
    let out = ramol()
        .args([
            "run",
            "--synthetic",
            spec.to_str().unwrap(),
            "--variant",
            "ram_naive",
            "--seeds",
            "9",
            "--drift-samples",
            "500",
            "--out",
            first_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_success(&out);
    let first = run_dir(&first_root);

    let second_root = tmp.path().join("second");
    let out = ramol()
        .args([
            "run",
            "--manifest",
            first.join("manifest.json").to_str().unwrap(),
            "--out",
            second_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_success(&out);
    let second = run_dir(&second_root);

    for file in ["metrics-seed9.json", "regret-seed9.json"] {
        let a: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(first.join(file)).unwrap()).unwrap();
        let b: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(second.join(file)).unwrap()).unwrap();
        for (key, value) in a.as_object().unwrap() {
            if key == "wall_clock_s" {
                continue;
            }
            assert_eq!(value, &b[key], "field {key} differs between reruns");
        }
    }
    // Parameter snapshots must be byte-identical.
    assert_eq!(
        std::fs::read(first.join("params-seed9.json")).unwrap(),
        std::fs::read(second.join("params-seed9.json")).unwrap()
    );
}

#[test]
fn ablate_emits_six_rows_and_rejects_variant_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let out_root = tmp.path().join("runs");
    let out = ramol()
        .args([
            "ablate",
            "--synthetic",
            spec.to_str().unwrap(),
            "--seed",
            "42",
            "--buffer",
            "100",
            "--out",
            out_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_success(&out);
    let table = std::fs::read_to_string(run_dir(&out_root).join("ablation.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 7); // header + six variants
    assert!(lines[1].starts_with("baseline,"));
    assert!(lines[1].contains("--")); // no memory stats for the baseline
    assert!(lines[6].starts_with("gated_no_decay,"));

    // ablate runs the fixed variant set; --variant is not a valid flag.
    let out = ramol()
        .args([
            "ablate",
            "--synthetic",
            spec.to_str().unwrap(),
            "--variant",
            "baseline",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_reports_baseline_factor_one() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let out_root = tmp.path().join("runs");
    let out = ramol()
        .args([
            "bench",
            "--synthetic",
            spec.to_str().unwrap(),
            "--seeds",
            "1,2",
            "--repeats",
            "2",
            "--buffer",
            "100",
            "--out",
            out_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_success(&out);
    let table = std::fs::read_to_string(run_dir(&out_root).join("bench.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4); // header + three variants
    assert_eq!(lines[0], "variant,final_std,avg_std,time_factor");
    assert!(lines[1].starts_with("baseline,"));
    assert!(lines[1].ends_with("1.00"));
}

#[test]
fn gen_is_deterministic_and_sidecar_matches_bayes_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let make = |name: &str| {
        let path = tmp.path().join(name);
        let out = ramol()
            .args([
                "gen",
                "--spec",
                spec.to_str().unwrap(),
                "--seed",
                "3",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_success(&out);
        path
    };
    let a = make("a.csv");
    let b = make("b.csv");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    // Agreement between generated labels and the sidecar's Bayes labels
    // estimates the Bayes accuracy: Phi(1) ~ 0.8413 for unit-variance
    // classes two apart with equal priors.
    let stream = std::fs::read_to_string(&a).unwrap();
    let sidecar = std::fs::read_to_string(a.with_extension("sidecar.csv")).unwrap();
    let labels = stream.lines().skip(1).map(|l| l.rsplit(',').next().unwrap());
    let bayes = sidecar.lines().skip(1).map(|l| l.rsplit(',').next().unwrap());
    let (mut agree, mut total) = (0usize, 0usize);
    for (y, yb) in labels.zip(bayes) {
        agree += usize::from(y == yb);
        total += 1;
    }
    assert_eq!(total, 1500);
    let accuracy = agree as f64 / total as f64;
    assert!(
        (accuracy - 0.8413).abs() < 0.03,
        "sidecar Bayes agreement {accuracy}"
    );
}

#[test]
fn tune_runs_the_grid_on_a_prefix() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let out_root = tmp.path().join("runs");
    let out = ramol()
        .args([
            "tune",
            "--synthetic",
            spec.to_str().unwrap(),
            "--prefix",
            "400",
            "--buffer",
            "100",
            "--out",
            out_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_success(&out);
    let table = std::fs::read_to_string(run_dir(&out_root).join("tune.csv")).unwrap();
    // header + baseline + 4 naive + 9 gated rows
    assert_eq!(table.lines().count(), 15);
}

#[test]
fn error_paths_use_distinct_exit_codes() {
    // Unknown flag: usage error, no outputs.
    let tmp = tempfile::tempdir().unwrap();
    let out_root = tmp.path().join("runs");
    let out = ramol()
        .args(["run", "--frobnicate", "--out", out_root.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_root.exists());

    // Missing dataset: data error.
    let out = ramol()
        .args([
            "run",
            "--data",
            "/definitely/not/here.csv",
            "--variant",
            "baseline",
            "--out",
            out_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_root.exists());

    // Invalid variant: usage error.
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let out = ramol()
        .args([
            "run",
            "--synthetic",
            spec.to_str().unwrap(),
            "--variant",
            "ram_psychic",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Ablation flags demand the gated variant.
    let out = ramol()
        .args([
            "run",
            "--synthetic",
            spec.to_str().unwrap(),
            "--variant",
            "ram_naive",
            "--ablation",
            "no_time",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numeric_failure_exits_3_and_removes_partial_outputs() {
    // An absurd learning rate drives the parameters to infinity within a few
    // steps; the gradients then stop being finite.
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "spec.toml", TWO_BLOBS);
    let out_root = tmp.path().join("runs");
    let out = ramol()
        .args([
            "run",
            "--synthetic",
            spec.to_str().unwrap(),
            "--variant",
            "baseline",
            "--lr",
            "1e18",
            "--out",
            out_root.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let leftovers = std::fs::read_dir(&out_root)
        .map(|d| d.count())
        .unwrap_or(0);
    assert_eq!(leftovers, 0, "partial run directory survived the failure");
}
