use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cesar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cesar"))
        .current_dir(dir)
        .arg("--quiet")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let o = cesar(dir.path(), &["tasks", "--json"]);
    assert!(o.status.success());
    let tasks: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(tasks
        .as_array()
        .unwrap()
        .iter()
        .any(|t| t["task_name"] == "beginswith_controlled_generation"));
}

#[test]
fn staged_commands_produce_a_scorable_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(cesar(d, &["--seed", "3", "--out", "corpus.jsonl", "ingest", "--synthetic", "15"]).status.success());
    assert!(cesar(d, &["--seed", "3", "--out", "atomic.jsonl", "tasks", "--in", "corpus.jsonl"]).status.success());
    assert!(cesar(d, &["--seed", "3", "--out", "all.jsonl", "compose", "--in", "atomic.jsonl", "--keep-atomic"])
        .status
        .success());
    let v = cesar(d, &["validate", "--in", "all.jsonl"]);
    assert!(v.status.success(), "{}", stdout(&v));
    assert!(stdout(&v).contains("0 violations"));

    let e = cesar(d, &["--seed", "3", "--out", "export", "export", "--in", "all.jsonl"]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let manifest: Value = serde_json::from_slice(&e.stdout).unwrap();
    assert!(manifest["files"]["train.jsonl"]["count"].as_u64().unwrap() > 0);

    // Score the gold outputs: every boolean constraint holds.
    let gold: String = fs::read_to_string(d.join("export/train.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let r: Value = serde_json::from_str(l).unwrap();
            serde_json::to_string(&r["output"]).unwrap() + "\n"
        })
        .collect();
    fs::write(d.join("gold.jsonl"), gold).unwrap();
    let s = cesar(
        d,
        &[
            "eval",
            "--constraints",
            "export/train.constraints.jsonl",
            "--outputs",
            "gold.jsonl",
            "--report",
            "report.json",
        ],
    );
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let summary: Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(summary["compositional_accuracy"], 1.0);
    assert_eq!(summary["bleu2"], 1.0);
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert!(report["per_example"].as_array().is_some_and(|a| !a.is_empty()));

    let st = cesar(d, &["stats", "--in", "export/train.jsonl"]);
    assert!(st.status.success());
    let stats: Value = serde_json::from_slice(&st.stdout).unwrap();
    assert_eq!(stats["total"], manifest["files"]["train.jsonl"]["count"]);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(cesar(d, &["--out", "c.jsonl", "ingest", "--synthetic", "3"]).status.success());
    assert!(cesar(d, &["--out", "i.jsonl", "tasks", "--in", "c.jsonl"]).status.success());
    assert_eq!(cesar(d, &["validate", "--in", "c.jsonl"]).status.code(), Some(0));

    // Break the first instance: an empty target.
    let text = fs::read_to_string(d.join("i.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut first: Value = serde_json::from_str(&lines[0]).unwrap();
    first["target_item"]["value"] = Value::String(String::new());
    lines[0] = first.to_string();
    fs::write(d.join("bad.jsonl"), lines.join("\n")).unwrap();
    let o = cesar(d, &["validate", "--in", "bad.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("bad.jsonl:1 "), "{}", stdout(&o));
    assert!(stdout(&o).contains("empty target"));

    fs::write(d.join("broken.jsonl"), format!("{}\n{{not json\n", lines[1])).unwrap();
    let o = cesar(d, &["validate", "--in", "broken.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.jsonl:2"));
}

#[test]
fn run_requires_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = cesar(dir.path(), &["run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}
