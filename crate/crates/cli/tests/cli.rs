use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn mcqdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcqdg")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mcqdg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn header(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stats_json() {
    let out = ok(&["stats", "--corpus", &fixture("corpus.jsonl"), "--json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let r = &v["report"];
    assert_eq!(r["n_texts"], 2);
    assert_eq!(r["n_mcqs"], 3);
}

#[test]
fn kernel_on_small_trees() {
    let out = ok(&["kernel", "--a", "(X (a) (b))", "--b", "(X (a))"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    // Shared fragments: a, X, X(a), each once.
    assert_eq!(v["ptk"], 3.0);
    assert_eq!(v["ptk_aa"], 6.0);
    assert_eq!(v["ptk_bb"], 3.0);
    assert!((v["ncptk"].as_f64().unwrap() - 3.0 / 18f64.sqrt()).abs() < 1e-12);
}

#[test]
fn baseline_then_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (gen, parses_out, report) = (tmp(&dir, "b.jsonl"), tmp(&dir, "b.conllu"), tmp(&dir, "m.json"));
    ok(&[
        "baseline", "--corpus", &fixture("corpus.jsonl"), "--parses", &fixture("parses.conllu"),
        "--out", s(&gen), "--parses-out", s(&parses_out), "--seed", "7",
    ]);
    assert_eq!(header(&gen)["seed"], 7);
    let recs = records(&gen);
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r["distractors"].as_array().unwrap().len() == 3));

    let table = ok(&[
        "metrics", "--generated", s(&gen), "--corpus", &fixture("corpus.jsonl"),
        "--train-corpus", &fixture("train.jsonl"), "--parses", s(&parses_out), "--json-out", s(&report),
    ]);
    assert!(table.contains("AnyDisInText"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let r = &v["report"];
    assert_eq!(r["n_mcqs"], 3);
    assert_eq!(r["key_in_dis"], 0.0);
    assert_eq!(r["any_dis_rep"], 0.0);
    assert!(r["ncptk"]["pairs"].as_u64().unwrap() > 0);
}

#[test]
fn extract_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for variant in ["l2r", "upmlm"] {
        let (a, b) = (tmp(&dir, "a.jsonl"), tmp(&dir, "b.jsonl"));
        for p in [&a, &b] {
            ok(&["extract", "--corpus", &fixture("corpus.jsonl"), "--variant", variant, "--out", s(p)]);
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(header(&a)["params"]["variant"], variant);
    }
}

#[test]
fn generate_via_mock_and_child_process() {
    let dir = tempfile::tempdir().unwrap();
    let script = fixture("mock.json");
    let (inproc, child) = (tmp(&dir, "m.jsonl"), tmp(&dir, "c.jsonl"));
    ok(&["generate", "--corpus", &fixture("corpus.jsonl"), "--predictor", &format!("mock:{script}"), "--out", s(&inproc)]);
    let cmd = format!("cmd:{} mock-serve --script {script}", env!("CARGO_BIN_EXE_mcqdg"));
    ok(&["generate", "--corpus", &fixture("corpus.jsonl"), "--predictor", &cmd, "--out", s(&child)]);
    assert_eq!(records(&inproc), records(&child));
    for r in records(&inproc) {
        assert_eq!(r["distractors"].as_array().unwrap().len(), 3);
    }

    let l2r = tmp(&dir, "l.jsonl");
    ok(&[
        "generate", "--corpus", &fixture("corpus.jsonl"), "--predictor", &format!("mock:{script}"),
        "--variant", "l2r", "--out", s(&l2r),
    ]);
    // The fallback reply's top candidate is never [SEP], so every run hits the cap.
    for r in records(&l2r) {
        for reason in r["stop_reasons"].as_array().unwrap() {
            assert_eq!(reason, "length");
        }
    }
}

#[test]
fn humaneval_students_teachers_sample() {
    let dir = tempfile::tempdir().unwrap();
    let (entropy, json) = (tmp(&dir, "e.csv"), tmp(&dir, "s.json"));
    let out = ok(&[
        "humaneval", "students", "--responses", &fixture("responses.csv"), "--mu0", "1.5",
        "--entropy-out", s(&entropy), "--json-out", s(&json),
    ]);
    assert!(out.contains("t(7) = 1.00"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["report"]["entropy"].as_array().unwrap().len(), 3);

    let out = ok(&["humaneval", "teachers", "--judgments", &fixture("judgments.csv"), "--responses", &fixture("responses.csv")]);
    assert!(out.contains("gamma_N"));

    let sampled = tmp(&dir, "sample.json");
    ok(&[
        "humaneval", "sample", "--entropy-report", s(&entropy), "--buckets", "3", "--per-bucket", "1",
        "--json-out", s(&sampled),
    ]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&sampled).unwrap()).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["report"].as_array().unwrap().len(), 3);
}

#[test]
fn model_select_from_metric_reports() {
    let dir = tempfile::tempdir().unwrap();
    let gen = tmp(&dir, "b.jsonl");
    ok(&["baseline", "--corpus", &fixture("corpus.jsonl"), "--parses", &fixture("parses.conllu"), "--out", s(&gen)]);
    let (a, b) = (tmp(&dir, "a.json"), tmp(&dir, "b.json"));
    for p in [&a, &b] {
        ok(&["metrics", "--generated", s(&gen), "--corpus", &fixture("corpus.jsonl"), "--json-out", s(p)]);
    }
    let out = ok(&["model-select", &format!("first={}", s(&a)), &format!("second={}", s(&b))]);
    assert!(out.contains("first") && out.contains("Rank"));
}

#[test]
fn failures_exit_with_code_one() {
    let out = mcqdg(&["stats", "--corpus", "/nonexistent/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = mcqdg(&["kernel", "--a", "(X", "--b", "(X)"]);
    assert_eq!(out.status.code(), Some(1));

    let out = mcqdg(&["generate", "--corpus", &fixture("corpus.jsonl"), "--predictor", "nowhere", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
}
