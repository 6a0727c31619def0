//! End-to-end checks of the `cfq` binary: output formats, exit codes,
//! and the failure paths for bad inputs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn cfq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn family_path(name: &str) -> String {
    format!("{}/../../families/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn synth_emits_polynomial_and_diagnostics() {
    let out = cfq(&["synth", "--family", &family_path("yokoi")]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["poly"]["a"], 4);
    assert_eq!(v["poly"]["b"], -4);
    assert_eq!(v["poly"]["c"], 5);
    assert_eq!(v["first_members"][0], 5);
    assert!(v["q_parity"].is_object());
}

#[test]
fn synth_rejects_bad_words() {
    let dir = tempfile::tempdir().unwrap();

    let not_palindromic = write_tmp(&dir, "np.json", r#"{"case":"A","word":[1,2]}"#);
    let out = cfq(&["synth", "--family", not_palindromic.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("palindrome"));

    let inadmissible = write_tmp(&dir, "inadm.json", r#"{"case":"A","word":[2,1,2]}"#);
    let out = cfq(&["synth", "--family", inadmissible.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("arithmetic progression"));
}

#[test]
fn scan_emits_csv_and_resumes_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let args = |x: &str| {
        vec![
            "scan".to_string(),
            "--family".to_string(),
            family_path("chowla"),
            "--x".to_string(),
            x.to_string(),
            "--cache".to_string(),
            cache.to_str().unwrap().to_string(),
        ]
    };
    let run = |x: &str| {
        let a: Vec<String> = args(x);
        let refs: Vec<&str> = a.iter().map(|s| s.as_str()).collect();
        cfq(&refs)
    };
    let first = run("500");
    assert!(first.status.success());
    let text = String::from_utf8_lossy(&first.stdout).to_string();
    assert!(text.starts_with("n,d,s,eps_x,eps_y,regulator,L1,h\n"));
    assert!(text.contains("1,5,1,1,1,"));

    let second = run("1000");
    assert!(second.status.success());
    let longer = String::from_utf8_lossy(&second.stdout);
    assert!(longer.starts_with(&text.lines().take(5).collect::<Vec<_>>().join("\n")));
    assert!(longer.lines().count() > text.lines().count());
}

#[test]
fn verify_exit_codes_follow_the_report() {
    let ok = cfq(&["verify", "--family", &family_path("f4_12_5")]);
    assert!(ok.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(rep["pass"], true);

    let bad = cfq(&["verify", "--family", &family_path("f4_12_5"), "--fault", "expect_x"]);
    assert!(!bad.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(rep["pass"], false);
}

#[test]
fn missing_family_file_fails_cleanly() {
    let out = cfq(&["scan", "--family", "/nonexistent.json", "--x", "100"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
