use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lagbonnet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

/// Flat data with phi = psi = 1, u = 0.
fn constant_file(dir: &TempDir, name: &str) -> PathBuf {
    constant_grid(dir, name, 32)
}

fn constant_grid(dir: &TempDir, name: &str, n: usize) -> PathBuf {
    let p = path(dir, name);
    let n = n.to_string();
    let out = run(&[
        "catalog",
        "constant",
        "--c",
        "0",
        "--phi",
        "1",
        "--psi",
        "1",
        "--nx",
        &n,
        "--ny",
        &n,
        "--out",
        s(&p),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn assert_schema(r: &Value) {
    for key in ["command", "input", "tolerance", "norms", "verdicts", "exit"] {
        assert!(r.get(key).is_some(), "missing {key} in {r}");
    }
    for n in r["norms"].as_object().unwrap().values() {
        assert!(n["linf"].is_f64() && n["l2"].is_f64());
    }
    for v in r["verdicts"].as_object().unwrap().values() {
        assert!(v.is_boolean());
    }
}

#[test]
fn check_on_constant_data_passes() {
    let dir = TempDir::new().unwrap();
    let data = constant_file(&dir, "const.json");
    let out = run(&["check", s(&data)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_schema(&r);
    assert_eq!(r["command"], "check");
    assert_eq!(r["exit"], 0);
    for (name, n) in r["norms"].as_object().unwrap() {
        assert!(n["linf"].as_f64().unwrap() < 1e-10, "{name}");
    }
}

#[test]
fn check_on_perturbed_data_fails_with_the_predicted_gauss_residual() {
    let dir = TempDir::new().unwrap();
    let data = constant_file(&dir, "const.json");
    let bumped = path(&dir, "bumped.json");
    let pred = path(&dir, "pred.json");
    let out = run(&[
        "catalog",
        "perturb",
        s(&data),
        "--field",
        "phi",
        "--epsilon",
        "0.1",
        "--out",
        s(&bumped),
        "--report",
        s(&pred),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let predicted: Value = serde_json::from_str(&std::fs::read_to_string(&pred).unwrap()).unwrap();
    let predicted = predicted["norms"]["predicted_gauss"]["linf"].as_f64().unwrap();

    let out = run(&["check", s(&bumped)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_schema(&r);
    assert_eq!(r["verdicts"]["integrable"], false);
    let gauss = r["norms"]["gauss"]["linf"].as_f64().unwrap();
    // |phi + eps b|^2 - |phi|^2 = 2 eps b + eps^2 b^2, so the first-order
    // prediction is low by at most eps / 2
    assert!((gauss - predicted).abs() <= 0.051 * predicted, "{gauss} vs {predicted}");
}

#[test]
fn pair_of_identical_fields_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let data = constant_file(&dir, "const.json");
    let out = run(&["pair", s(&data), s(&data)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a pair"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\"version\": 1}").unwrap();
    for args in [
        vec!["check", "/nonexistent.json"],
        vec!["check", s(&bad)],
        vec!["frobnicate"],
        vec!["deform", s(&bad)],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn reconstruct_writes_csv_and_report() {
    let dir = TempDir::new().unwrap();
    // step 1/128 keeps the RK4 monodromy under the default bound
    let data = constant_grid(&dir, "const.json", 129);
    let csv = path(&dir, "imm.csv");
    let rep = path(&dir, "rep.json");
    let out = run(&["reconstruct", s(&data), "--out", s(&csv), "--report", s(&rep)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_schema(&r);
    assert!(r["norms"]["monodromy.frame"]["linf"].as_f64().unwrap() <= 1e-6);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,f1_re,f1_im,f2_re,f2_im"));
    assert_eq!(text.lines().count(), 1 + 129 * 129);
}

#[test]
fn deform_writes_new_data_that_rechecks() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "minimal.json");
    let out = run(&[
        "catalog",
        "constant",
        "--c",
        "1",
        "--psi",
        "0.6,0.8",
        "--nx",
        "16",
        "--ny",
        "16",
        "--out",
        s(&data),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let deformed = path(&dir, "deformed.json");
    let out = run(&["deform", s(&data), "--t0", "0.7", "--out", s(&deformed)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_schema(&r);
    assert_eq!(r["verdicts"]["admissible"], true);
    let out = run(&["check", s(&deformed)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn umbilics_and_bonnet_reports() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "torus.json");
    let out = run(&[
        "catalog",
        "constant",
        "--c",
        "0",
        "--phi",
        "1",
        "--psi",
        "1",
        "--nx",
        "16",
        "--ny",
        "16",
        "--periodic-x",
        "--periodic-y",
        "--out",
        s(&data),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["umbilics", s(&data)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["details"]["umbilics"]["degree"], 0);
    assert_eq!(r["verdicts"]["genus_one_consistent"], true);

    let out = run(&["bonnet", s(&data)]);
    let r = report(&out);
    assert_schema(&r);
    assert_eq!(r["verdicts"]["r17_r18_agree"], true);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn merged_report_keeps_the_worst_exit() {
    let dir = TempDir::new().unwrap();
    let data = constant_file(&dir, "const.json");
    let bumped = path(&dir, "bumped.json");
    run(&[
        "catalog",
        "perturb",
        s(&data),
        "--field",
        "u",
        "--epsilon",
        "0.1",
        "--out",
        s(&bumped),
        "--report",
        s(&path(&dir, "p.json")),
    ]);
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    assert_eq!(run(&["check", s(&data), "--report", s(&a)]).status.code(), Some(0));
    assert_eq!(run(&["check", s(&bumped), "--report", s(&b)]).status.code(), Some(1));
    let out = run(&["report", s(&a), s(&b)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["verdicts"]["0.check.integrable"], true);
    assert_eq!(r["verdicts"]["1.check.integrable"], false);
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = constant_file(&dir, "const.json");
    let a = run(&["bonnet", s(&data)]).stdout;
    let b = run(&["bonnet", s(&data)]).stdout;
    assert_eq!(a, b);
}
