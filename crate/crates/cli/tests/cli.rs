use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use x402_guard::testbed::{AUDIT_KEY, MEDICAL_EXPORT_SURFACES};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_x402-guard")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_corpus_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen-corpus", "--seed", "42", "--n", "2000", "--out", "nested/corpus/"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("nested/corpus");
    assert!(out.join("corpus.jsonl").is_file());
    assert!(out.join("corpus_meta.json").is_file());
    assert_eq!(fs::read_to_string(out.join("corpus.jsonl")).unwrap().lines().count(), 2000);
    assert!(stdout(&o).contains("722 PII-positive"));
}

#[test]
fn gen_corpus_output_never_contains_pii() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen-corpus", "--n", "300", "--out", "c"], dir.path());
    let text = stdout(&o);
    let samples = x402_guard::corpus::load_corpus(&dir.path().join("c")).unwrap();
    let surfaces: Vec<String> = samples.iter().flat_map(|s| s.labels.iter().filter_map(|l| s.surface(l))).collect();
    assert!(!surfaces.is_empty());
    for s in &surfaces {
        assert!(!text.contains(s.as_str()), "{s}");
    }
}

#[test]
fn bad_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["gen-corpus", "--pii-rate", "1.5", "--out", "c"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["gen-corpus", "--n", "0", "--out", "c"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["gen-corpus", "--out", "c", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["demo", "--scenario", "nope"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&[], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_writes_42_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["gen-corpus", "--n", "400", "--out", "c"], dir.path()).status.code(), Some(0));
    let o = run(&["sweep", "--corpus", "c", "--out", "out/report"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/report/sweep_report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 42);
    assert!(dir.path().join("out/report/sweep_report.md").is_file());
}

#[test]
fn sweep_on_missing_corpus_is_operational_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["sweep", "--corpus", "absent", "--out", "r"], dir.path()).status.code(), Some(1));
}

#[test]
fn price_inflation_demo_blocks_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.json"),
        r#"{"max_per_call_usd":"1.00","daily_limit_usd":"10.00","max_per_endpoint_usd":"5.00"}"#,
    )
    .unwrap();
    let o = run(&["demo", "--scenario", "price-inflation", "--policy-file", "p.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("BLOCKED_POLICY"), "{text}");
    assert!(text.contains("settlements=0"));
}

#[test]
fn pii_demo_prints_no_surface_forms() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["demo", "--scenario", "pii-instructing"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.matches("leaked_surfaces=0").count(), 6, "{text}");
    for s in
        MEDICAL_EXPORT_SURFACES.iter().chain(["alice.martin@corp.io", "4111 1111 1111 1111", "+14155550182"].iter())
    {
        assert!(!text.contains(s), "{s}");
    }
}

#[test]
fn malformed_policy_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.json"), "{\"max_per_call_usd\": 1}").unwrap();
    let o = run(&["demo", "--scenario", "honest", "--policy-file", "p.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_audit_ok_then_tampered() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k"), AUDIT_KEY).unwrap();
    let o = run(&["demo", "--scenario", "replay-echo", "--audit-log", "logs/audit.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("BLOCKED_REPLAY"));
    assert!(dir.path().join("logs/audit.jsonl.head").is_file());

    let o = run(&["verify-audit", "--log", "logs/audit.jsonl", "--key-file", "k"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "OK");

    let log = dir.path().join("logs/audit.jsonl");
    let text = fs::read_to_string(&log).unwrap();
    fs::write(&log, text.replacen("duplicate payment", "duplicate paymenT", 1)).unwrap();
    let o = run(&["verify-audit", "--log", "logs/audit.jsonl", "--key-file", "k"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "TAMPERED at seq 1");

    // Dropping the last line is caught by the head sidecar.
    let first = text.lines().next().unwrap();
    fs::write(&log, format!("{first}\n")).unwrap();
    let o = run(&["verify-audit", "--log", "logs/audit.jsonl", "--key-file", "k"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "TAMPERED at seq 1");
}

#[test]
fn verify_audit_wrong_key_is_tampered() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k"), b"not-the-key").unwrap();
    run(&["demo", "--scenario", "honest", "--audit-log", "a.jsonl"], dir.path());
    let o = run(&["verify-audit", "--log", "a.jsonl", "--key-file", "k"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "TAMPERED at seq 0");
}
