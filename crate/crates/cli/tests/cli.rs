use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn morcam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morcam"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn scenario(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn fields_check_ex13_is_non_trapping() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(
        tmp.path(),
        "ex13.toml",
        "dimension = 3\n[potential]\nmagnetic = { kind = \"ex13\" }\n[run]\nkind = \"fields-check\"\nsamples = 200\n",
    );
    let out_dir = tmp.path().join("out");
    let out = morcam(&[&file, "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out_dir);
    assert!(rep["result"]["max_trapping_analytic"].as_f64().unwrap() <= 1e-10);
    assert!(rep["result"]["max_trapping_fd"].as_f64().unwrap() <= 1e-6);
    assert_eq!(rep["scenario"]["run"]["radius"].as_f64(), Some(8.0));
    assert_eq!(rep["scenario"]["grid"]["spacing"].as_f64(), Some(0.25));
}

#[test]
fn coulomb_is_not_admissible() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(
        tmp.path(),
        "coulomb.toml",
        "dimension = 3\n[potential]\nelectric = { kind = \"coulomb\", strength = -1.0 }\n[run]\nkind = \"admissibility\"\n",
    );
    let out = morcam(&[&file, "--json-only", "--out-dir", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["result"]["report"]["C2"], "inf");
    assert_eq!(rep["result"]["report"]["admissible"], false);
    assert_eq!(rep, report(tmp.path()));
}

#[test]
fn malformed_file_exits_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(tmp.path(), "bad.toml", "dimension = 3\n[run\nkind = \"solve\"\n");
    let out = morcam(&[&file, "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert!(err["error"]["message"].as_str().unwrap().contains("bad.toml:2:"));
    assert!(tmp.path().join("error.json").exists());
}

#[test]
fn parameter_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(
        tmp.path(),
        "p.toml",
        "[run]\nkind = \"solve\"\nepsilon = 0.0\n[grid]\nhalf_width = 4.0\nspacing = 0.5\n",
    );
    let out = morcam(&[&file, "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn solver_failure_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(
        tmp.path(),
        "s.toml",
        "[grid]\nhalf_width = 4.0\nspacing = 0.5\n[run]\nkind = \"solve\"\nepsilon = 0.01\n[potential]\nelectric = { kind = \"gaussian\", amplitude = -5.0 }\n[solver]\ntol = 1e-12\nrestart = 1\nmax_iterations = 2\n",
    );
    let out = morcam(&[&file, "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(
        tmp.path(),
        "sweep.toml",
        "[grid]\nhalf_width = 4.0\nspacing = 0.5\n[run]\nkind = \"sweep\"\nepsilons = [1.0, 0.5]\n[output]\nprefix = \"a_\"\n",
    );
    let out = morcam(&[&file, "--out-dir", tmp.path().to_str().unwrap(), "--threads", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("a_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epsilon,lhs,rhs,ratio");
    assert_eq!(lines.len(), 3);
    assert!(!csv.contains('\r'));
    assert!(tmp.path().join("a_report.json").exists());
}

#[test]
fn solve_snapshot_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(
        tmp.path(),
        "solve.toml",
        "[grid]\nhalf_width = 4.0\nspacing = 0.5\n[run]\nkind = \"solve\"\nepsilon = 1.0\n",
    );
    let out = morcam(&[&file, "--out-dir", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let bytes = fs::read(tmp.path().join("solution.mcsf")).unwrap();
    let u = morcam::ScalarField::read_snapshot(bytes.as_slice()).unwrap();
    assert_eq!(u.grid().per_axis(), 16);
    let mut again = Vec::new();
    u.write_snapshot(&mut again).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario(
        tmp.path(),
        "id.toml",
        "[grid]\nhalf_width = 4.0\nspacing = 0.5\n[run]\nkind = \"verify-identity\"\ndatum = { kind = \"point_bump\", width = 1.5 }\n",
    );
    let a = morcam(&[&file, "--json-only", "--threads", "1", "--out-dir", tmp.path().to_str().unwrap()]);
    let b = morcam(&[&file, "--json-only", "--threads", "1", "--out-dir", tmp.path().to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn list_builtins_text_and_json() {
    let out = morcam(&["--list-builtins"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ex13") && text.contains("ex14"));

    let out = morcam(&["--list-builtins", "--json"]);
    let cat: Value = serde_json::from_slice(&out.stdout).unwrap();
    let kinds: Vec<&str> = cat["runs"].as_array().unwrap().iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["fields-check", "admissibility", "solve", "verify-identity", "sweep"]);
}

#[test]
fn unknown_flag_prints_usage_and_exits_2() {
    let out = morcam(&["--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}
