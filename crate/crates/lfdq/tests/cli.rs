use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn lfdq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfdq")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(path: &Path, v: Value) -> PathBuf {
    fs::write(path, v.to_string()).unwrap();
    path.to_path_buf()
}

#[test]
fn selftest_passes() {
    let out = lfdq(&["selftest"]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(code(&out), 0, "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8, "{text}");
}

#[test]
fn full_pipeline_and_relabeling() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let spec = write(&d.join("spec.json"), json!({"n_fast": 1, "n_slow": 1, "seed": 2}));
    let cohort = d.join("cohort");
    let results = d.join("results");
    let report = d.join("report");

    assert_eq!(code(&lfdq(&["synth", "--spec", p(&spec), "--out", p(&cohort)])), 0);
    assert!(cohort.join("p02/2/3/low/target_8.json").exists());
    let out = lfdq(&[
        "eval",
        "--cohort",
        p(&cohort),
        "--world",
        &data("reference_world.json"),
        "--params",
        &data("params.json"),
        "--out",
        p(&results),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(results.join("results.json").exists() && results.join("rates.csv").exists());

    let out = lfdq(&["classify", "--results", p(&results), "--delta", "0.95"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("p01 "));
    assert_eq!(code(&lfdq(&["report", "--results", p(&results), "--out", p(&report)])), 0);

    let summary: Value = serde_json::from_str(&fs::read_to_string(report.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["delta"], json!(0.95));
    assert_eq!(summary["trials"], json!(24));
    let counts = &summary["adapters"];
    assert_eq!(counts["fast"].as_u64().unwrap() + counts["slow"].as_u64().unwrap(), 2);
    assert!(summary["rho"].as_f64().unwrap().abs() <= 1.0);
    assert!(summary["cells"].as_array().unwrap().len() >= 4);

    let rates = fs::read_to_string(report.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().next().unwrap(), "demonstrator,session,trial,face,task_rate,gen_rate,label");
    assert_eq!(rates.lines().count(), 25);
    for line in rates.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let rate: f64 = f[4].parse().unwrap();
        assert_eq!(f[6], if rate > 0.95 { "high" } else { "low" });
    }
}

#[test]
fn input_problems_exit_with_schema_code() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let missing = d.join("missing.json");
    let out = lfdq(&["synth", "--spec", p(&missing), "--out", p(&d.join("c"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("not found"));

    let spec = write(&d.join("spec.json"), json!({"n_fast": -1}));
    assert_eq!(code(&lfdq(&["synth", "--spec", p(&spec), "--out", p(&d.join("c"))])), 2);
    let spec = write(&d.join("spec.json"), json!({"fast_profile": {"base_noise": 0.1}}));
    assert_eq!(code(&lfdq(&["synth", "--spec", p(&spec), "--out", p(&d.join("c"))])), 2);

    let out = lfdq(&[
        "eval",
        "--cohort",
        p(&d.join("nothing")),
        "--world",
        &data("reference_world.json"),
        "--params",
        &data("params.json"),
        "--out",
        p(&d.join("r")),
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&lfdq(&["report", "--results", p(&d.join("nothing")), "--out", p(&d.join("r"))])), 2);
    assert_eq!(code(&lfdq(&["frobnicate"])), 2);
}

#[test]
fn incomplete_results_exit_with_evaluation_code() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let outcomes = |n: usize| vec!["success"; n];
    let records: Vec<Value> = ["low", "high"]
        .iter()
        .map(|face| {
            json!({
                "demonstrator": "p01", "session": 2, "trial": 1, "face": face,
                "task_rate": 1.0, "gen_rate": 1.0,
                "task": outcomes(9), "generalization": outcomes(49)
            })
        })
        .collect();
    write(&d.join("results.json"), json!({"delta": 0.8, "records": records}));
    let out = lfdq(&["classify", "--results", p(d), "--delta", "0.8"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8(out.stderr).unwrap().contains("session-1"));
    assert_eq!(code(&lfdq(&["classify", "--results", p(d), "--delta", "1.5"])), 2);
}
