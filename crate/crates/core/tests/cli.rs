//! End-to-end runs of the `bisis` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bisis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_passes_on_default_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = bisis(&["validate", "--output", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS") && !text.contains("FAIL"), "{text}");
}

#[test]
fn solve_writes_plan_with_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = bisis(&["solve", "--epsilon", "0.05", "--output", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let plan = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    let mut lines = plan.lines();
    assert!(lines.next().unwrap().starts_with("schema,node,node_id,w,nu"));
    assert_eq!(lines.count(), 62);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert!(manifest.is_object());
}

#[test]
fn generated_graph_reloads_with_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    let gen = bisis(&[
        "generate",
        "--family",
        "dolphins-like",
        "--arg",
        "1",
        "--out",
        path(&edges),
    ]);
    assert_eq!(gen.status.code(), Some(0));
    let synth = bisis(&["solve", "--output", path(&dir.path().join("a"))]);
    let file = bisis(&[
        "solve",
        "--graph",
        path(&edges),
        "--indexing",
        "zero",
        "--output",
        path(&dir.path().join("b")),
    ]);
    let first = |o: &Output| stdout(o).lines().next().unwrap_or_default().to_string();
    assert_eq!(first(&synth), first(&file));
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, "graph = \"synth:cycle:12\"\ntau1 = 0.9\ntau2 = 0.3\n").unwrap();
    let out = bisis(&[
        "solve",
        "--config",
        path(&cfg),
        "--output",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let plan = std::fs::read_to_string(dir.path().join("o/plan.csv")).unwrap();
    assert_eq!(plan.lines().count(), 13);
}

#[test]
fn bad_input_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bisis(&[
        "solve",
        "--graph",
        path(&dir.path().join("missing.txt")),
        "--output",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}
