use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TANH: &str = r#"
[manifold]
kind = "line"
extent = [-8.0, 8.0]
spacing = 0.1

[family]
name = "tanh"
compact = [-2.0, 2.0]

[task]
kind = "index"
"#;

fn callias(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_callias"))
        .arg("--config")
        .arg(&path)
        .args(args)
        .env_remove("CALLIAS_OUT_DIR")
        .current_dir(dir)
        .output()
        .unwrap()
}

/// Every result document under `root`, sorted by path.
fn documents(root: &Path) -> Vec<PathBuf> {
    let mut out = vec![];
    for hash in std::fs::read_dir(root).unwrap() {
        for f in std::fs::read_dir(hash.unwrap().path()).unwrap() {
            let p = f.unwrap().path();
            if p.file_name().unwrap().to_string_lossy().starts_with("result") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn load(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_two_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = callias(dir.path(), "[manifold\nkind = 1", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "{err}");

    let bad = TANH.replace("compact = [-2.0, 2.0]", "bounds = [1.2, 0.5]");
    let out = callias(dir.path(), &bad, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("family.bounds[0]") && err.contains("a_j must lie in (0,1)"), "{err}");
}

#[test]
fn tanh_index_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = callias(dir.path(), TANH, &["--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let docs = documents(&dir.path().join("o"));
    assert_eq!(docs.len(), 1);
    let doc = load(&docs[0]);
    assert_eq!(doc["status"], "pass");
    assert_eq!(doc["exit_code"], 0);
    let index = &doc["report"]["index"];
    assert_eq!(index["index"], serde_json::json!([1]));
    assert_eq!(index["converged"], true);
    assert!(index["gap_ratio"].as_f64().unwrap() >= 100.0);
    assert!(index["trail"].as_array().unwrap().len() >= 3);
    assert_eq!(doc["config"]["family"]["name"], "tanh");
    assert!(doc["defaulted"].as_array().unwrap().iter().any(|k| k == "numerics.scheme"));
}

#[test]
fn repeated_runs_append_and_match_except_timings() {
    let dir = tempfile::tempdir().unwrap();
    for _ in 0..2 {
        let out = callias(dir.path(), TANH, &["--out", "o", "--jobs", "1"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let docs = documents(&dir.path().join("o"));
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0].parent(), docs[1].parent());
    let (mut a, mut b) = (load(&docs[0]), load(&docs[1]));
    a["timings"] = Value::Null;
    b["timings"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn output_root_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, TANH).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_callias"))
        .arg("--config")
        .arg(&path)
        .env("CALLIAS_OUT_DIR", dir.path().join("from-env"))
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(documents(&dir.path().join("from-env")).len(), 1);

    let with_dir = format!("{TANH}\n[output]\ndir = \"from-config\"\n");
    let status = Command::new(env!("CARGO_BIN_EXE_callias"))
        .arg("--config")
        .arg({
            std::fs::write(&path, &with_dir).unwrap();
            &path
        })
        .env("CALLIAS_OUT_DIR", dir.path().join("from-env"))
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(documents(&dir.path().join("from-config")).len(), 1);
    assert_eq!(documents(&dir.path().join("from-env")).len(), 1);
}

#[test]
fn emit_branches_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let text = TANH.replace("kind = \"index\"", "kind = \"sflow\"");
    let out = callias(dir.path(), &text, &["--out", "o", "--emit-branches"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = &documents(&dir.path().join("o"))[0];
    let csv = std::fs::read_to_string(doc.parent().unwrap().join("branches.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("arclength,branch,eigenvalue"));
    assert!(lines.count() > 10);
}

#[test]
fn index_equals_flow_ensemble_passes() {
    let dir = tempfile::tempdir().unwrap();
    let text = TANH.replace(
        "kind = \"index\"",
        "kind = \"theorem\"\nid = \"index=sf\"\n[task.ensemble]\ninstances = 50\ndims = [1, 2]",
    );
    let out = callias(dir.path(), &text, &["--out", "o", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = load(&documents(&dir.path().join("o"))[0]);
    let r = &doc["report"]["theorem"];
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["instances"], 50);
    assert_eq!(r["failures"].as_array().unwrap().len(), 0);
    assert_eq!(r["ensemble"]["master_seed"], 42);
    for v in r["values"].as_array().unwrap() {
        let rec = &v["indices"][0];
        assert!(rec["gap_ratio"].as_f64().unwrap() >= 100.0);
        assert_eq!(rec["index"], v["flows"][0]["net_flow"]);
    }
}
