use std::path::Path;
use std::process::{Command, Output};

fn mlr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_recovers_in_paper_regime() {
    let out = mlr(&["solve", "--k", "10", "--n", "300", "--delta", "0.3", "--seed", "1"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["exact"], true);
    assert!(v["iterations_used"].as_u64().unwrap() <= 15);
}

#[test]
fn hardness_reports_partition() {
    let out = mlr(&["hardness", "--values", "1,2,3"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "solvable, partition {3}|{1,2}"
    );
    let out = mlr(&["hardness", "--values", "1,2"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "not solvable");
}

#[test]
fn cone_lemma_suite_passes() {
    let out = mlr(&["lemmas", "--suite", "cone", "--nmc", "1000000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["all_passed"], true);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mlr(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mlr(&["solve", "--resample", "maybe"]).status.code(), Some(2));
    let out = mlr(&["solve", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"trials": 3, "colour": "red"}"#).unwrap();
    let out = mlr(&["phase", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.csv");
    let out = mlr(&[
        "gen",
        "--k",
        "3",
        "--n",
        "7",
        "--seed",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,x3,y,z");
    assert_eq!(lines.len(), 8);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
}

fn read_all_csv(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"k": [4, 6], "ratios": [2.0, 10.0, 30.0], "trials": 10, "t0": 8}"#,
    )
    .unwrap();
    for cmd in ["phase", "sweep", "trace"] {
        let a = dir.path().join(format!("{cmd}-a"));
        let b = dir.path().join(format!("{cmd}-b"));
        for out in [&a, &b] {
            let o = mlr(&[
                cmd,
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "9",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let (fa, fb) = (read_all_csv(&a), read_all_csv(&b));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{cmd}");
    }
}

#[test]
fn phase_output_has_wilson_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlr(&[
        "phase",
        "--k",
        "4",
        "--trials",
        "5",
        "--t0",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("wilson_low,wilson_high"));
    assert!(dir.path().join("summary.json").exists());
}
