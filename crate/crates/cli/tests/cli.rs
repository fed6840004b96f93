use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_quadgrad");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn quadgrad(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run(scenario: &str, config: &Path, out: &Path) -> Output {
    quadgrad(&[scenario, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const MINIMAL_EIGEN: &str = r#"{"scenario": "eigen", "problem": {"domain": "interval", "length": 1.0, "n": 511, "c": 1.0}}"#;

#[test]
fn minimal_eigen_config_uses_defaults() {
    let dir = scratch("minimal");
    let cfg = write_config(&dir, MINIMAL_EIGEN);
    let out = run("eigen", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let eigen = read_json(&dir.join("out/eigen.json"));
    let value = eigen["value"].as_f64().unwrap();
    assert!((value - std::f64::consts::PI.powi(2)).abs() < 1e-3 * value);
    assert_eq!(eigen["n"], 511);
    let report = read_json(&dir.join("out/report.json"));
    assert_eq!(report["config"]["problem"]["h"], 0.0);
    assert_eq!(report["config"]["problem"]["mu"], 1.0);
    let csv = fs::read_to_string(dir.join("out/eigenfunction.csv")).unwrap();
    assert!(csv.starts_with("index,x,value\n"));
    assert_eq!(csv.lines().count(), 512);
}

#[test]
fn negative_n_is_a_validation_error() {
    let dir = scratch("negative_n");
    let cfg = write_config(&dir, &MINIMAL_EIGEN.replace("511", "-5"));
    let out = run("eigen", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("problem.n"), "{}", stderr(&out));
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    let dir = scratch("unknown_key");
    let cfg = write_config(
        &dir,
        r#"{"problem": {"domain": "interval", "length": 1.0, "n": 31, "c": 1.0}, "params": {"lamda": 1.0}}"#,
    );
    let out = run("solve", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lamda"), "{}", stderr(&out));

    let cfg = write_config(
        &dir,
        r#"{"problem": {"domain": "interval", "length": 1.0, "n": 31, "c": 1.0}, "params": {"family": "a"}}"#,
    );
    let out = run("solve", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("params.family"), "{}", stderr(&out));
}

#[test]
fn malformed_json_reports_the_line() {
    let dir = scratch("malformed");
    let cfg = write_config(&dir, "{\n  \"problem\": {\n    \"n\": ,\n  }\n}");
    let out = run("eigen", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn missing_table_is_a_validation_error() {
    let dir = scratch("missing_csv");
    let cfg = write_config(
        &dir,
        r#"{"problem": {"domain": "interval", "length": 1.0, "n": 31, "c": 1.0, "h": {"csv": "nowhere.csv"}}}"#,
    );
    let out = run("eigen", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nowhere.csv"), "{}", stderr(&out));
}

#[test]
fn tabulated_coefficients_are_read_relative_to_the_config() {
    let dir = scratch("table");
    let mut csv = String::from("index,x,value\n");
    for k in 0..31 {
        csv.push_str(&format!("{k},0,2.0\n"));
    }
    fs::write(dir.join("c.csv"), csv).unwrap();
    let cfg = write_config(&dir, r#"{"problem": {"domain": "interval", "length": 1.0, "n": 31, "c": {"csv": "c.csv"}}}"#);
    let out = run("eigen", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let value = read_json(&dir.join("out/eigen.json"))["value"].as_f64().unwrap();
    assert!((value - 0.5 * std::f64::consts::PI.powi(2)).abs() < 5e-3 * value);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(quadgrad(&[]).status.code(), Some(1));
    assert_eq!(quadgrad(&["plot", "--config", "x.json"]).status.code(), Some(1));
    assert_eq!(quadgrad(&["eigen"]).status.code(), Some(1));
    assert_eq!(quadgrad(&["--help"]).status.code(), Some(0));
}

#[test]
fn scenario_mismatch_is_a_validation_error() {
    let dir = scratch("mismatch");
    let cfg = write_config(&dir, MINIMAL_EIGEN);
    let out = run("solve", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = scratch("solver_failure");
    let cfg = write_config(
        &dir,
        r#"{"problem": {"domain": "interval", "length": 1.0, "n": 63, "c": 1.0, "h": 4.934802200544679},
            "params": {"lambda": 5.0}}"#,
    );
    let out = run("solve", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn failed_assertion_exits_with_four() {
    let dir = scratch("assertion");
    let cfg = write_config(
        &dir,
        r#"{"problem": {"domain": "interval", "length": 1.0, "n": 63, "c": 1.0},
            "expect": {"eigenvalue": {"value": 10.5, "rel_tol": 1e-3}}}"#,
    );
    let out = run("eigen", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(4));
    let report = read_json(&dir.join("out/report.json"));
    assert_eq!(report["outcomes"][0]["passed"], false);
}

#[test]
fn branch_past_the_fold_succeeds() {
    let dir = scratch("thm1");
    let out = run("branch", &fixtures().join("thm1.json"), &dir);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = read_json(&dir.join("branch.json"));
    assert_eq!(summary["terminated_by"], "fold");
    let fold = summary["fold_estimate"].as_f64().unwrap();
    assert!(fold > 0.0 && fold < summary["gamma1"].as_f64().unwrap());
    let csv = fs::read_to_string(dir.join("branch.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("param,sup_norm,min,max,step,fold_flag"));
    let last: f64 = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(last <= fold * (1.0 + 1e-6), "branch extends to {last}, fold {fold}");
    assert!(csv.lines().any(|l| l.ends_with(",1")));
}

#[test]
fn expected_absence_inverts() {
    let dir = scratch("surprise");
    let out = run("solve", &fixtures().join("surprise.json"), &dir);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = read_json(&dir.join("solve.json"));
    assert_eq!(summary["converged"], 0);
    assert_eq!(summary["expected_absence"], true);
}

#[test]
fn trivial_and_signed_branches_meet_at_gamma1() {
    let dir = scratch("cash0");
    let out = run("branch", &fixtures().join("cash0.json"), &dir);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let gamma1 = read_json(&dir.join("branch.json"))["gamma1"].as_f64().unwrap();
    let signed = fs::read_to_string(dir.join("signed_branch.csv")).unwrap();
    let rows: Vec<Vec<f64>> = signed
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    for r in &rows {
        if r[0] < gamma1 {
            assert!(r[2] > 0.0);
        } else if r[0] > gamma1 {
            assert!(r[3] < 0.0);
        } else {
            assert_eq!(r[1], 0.0);
        }
    }
    assert!(fs::read_to_string(dir.join("zero_branch.csv")).unwrap().lines().skip(1).all(|l| l.contains(",0.00000000000000000e0,")));
}

#[test]
fn every_fixture_passes() {
    for (name, scenario) in [
        ("thm2", "solve"),
        ("thm3", "branch"),
        ("thm4", "branch"),
        ("timemap-case1", "timemap"),
        ("timemap-case2", "timemap"),
        ("timemap-case3", "timemap"),
    ] {
        let dir = scratch(name);
        let out = run(scenario, &fixtures().join(format!("{name}.json")), &dir);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
        assert!(dir.join("report.json").is_file());
    }
}

#[test]
fn timemap_emits_table_solutions_and_summary() {
    let dir = scratch("timemap_files");
    let out = run("timemap", &fixtures().join("timemap-case1.json"), &dir);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.join("time_map.csv")).unwrap();
    assert!(table.starts_with("a,T_plus\n"));
    let sols = fs::read_to_string(dir.join("solutions.csv")).unwrap();
    assert!(sols.starts_with("s,end_value,classification,turns\n"));
    assert_eq!(sols.lines().count(), 3);
    let summary = read_json(&dir.join("timemap.json"));
    assert_eq!(summary["case"], "case1");
    assert_eq!(summary["counts"]["total"], 2);
    assert!((summary["T0"].as_f64().unwrap() - 1.7627748901).abs() < 1e-6);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (scratch("rerun_a"), scratch("rerun_b"));
    for dir in [&a, &b] {
        let out = quadgrad(&[
            "solve",
            "--config",
            fixtures().join("thm2.json").to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "17",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 4);
    for name in names {
        let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
        assert!(x == y, "{name:?} differs");
        assert!(!x.contains(&b'\r'));
    }
    assert_eq!(read_json(&a.join("report.json"))["seed"], 17);
}

#[test]
fn verify_suite_subset_passes() {
    let dir = scratch("suite");
    let cfg = write_config(&dir, r#"{"scenario": "verify_suite", "params": {"criteria": [1, 2, 11]}}"#);
    let out = run("verify_suite", &cfg, &dir.join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.join("out/suite.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,")));
}
