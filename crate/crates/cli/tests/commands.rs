use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TREE: &str = "data Tree = LeafA | LeafB | LeafC | Node Tree Tree\n";
const TREE_PRIME: &str = "data Tree' = Leaf | NodeA Tree' Tree' | NodeB Tree'\n";
const T1T2: &str = "data T1 = A | B T1 T2\ndata T2 = C | D T1\n";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }
}

fn dragen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dragen"))
        .args(args)
        .env_remove("DRAGEN_SEED")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json_ok(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn check_reports_family_and_constructors() {
    let ws = Workspace::new();
    let tree = ws.file("tree.adt", TREE);
    let v = json_ok(&dragen(&["check", "-f", p(&tree), "--root", "Tree"]));
    assert_eq!(v["types"].as_array().unwrap().len(), 1);
    assert_eq!(v["types"][0]["constructors"].as_array().unwrap().len(), 4);
    assert_eq!(v["terminals"]["Tree"].as_array().unwrap().len(), 3);

    let t = ws.file("t.adt", T1T2);
    let v = json_ok(&dragen(&["check", "-f", p(&t), "--root", "T1"]));
    assert_eq!(v["family"], serde_json::json!(["T1", "T2"]));
}

#[test]
fn malformed_and_empty_files_fail_with_status_one() {
    let ws = Workspace::new();
    let bad = ws.file("bad.adt", "data Tree = Leaf\n  | Node Tree (Tree\n");
    let out = dragen(&["check", "-f", p(&bad), "--root", "Tree"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("3:1"));

    let empty = ws.file("empty.adt", "");
    let out = dragen(&["histogram", "-f", p(&empty), "--root", "Tree"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let ws = Workspace::new();
    let tree = ws.file("tree.adt", TREE);
    for args in [
        vec!["verify", "-f", p(&tree), "--root", "Tree", "--count", "0"],
        vec!["sample", "-f", p(&tree), "--root", "Tree", "--format", "xml"],
        vec!["predict", "--root", "Tree"],
        vec!["frobnicate"],
    ] {
        assert_eq!(dragen(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn predict_tree_prime_worked_example() {
    let ws = Workspace::new();
    let file = ws.file("tp.adt", TREE_PRIME);
    let probs = ws.file(
        "p.json",
        r#"{"probabilities": {"Tree'.Leaf": 0.2, "Tree'.NodeA": 0.5, "Tree'.NodeB": 0.3}}"#,
    );
    let v = json_ok(&dragen(&["predict", "-f", p(&file), "--root", "Tree'", "--size", "10", "--probs", p(&probs)]));
    let node_a = v["expected"]["Tree'.NodeA"].as_f64().unwrap();
    let node_b = v["expected"]["Tree'.NodeB"].as_f64().unwrap();
    assert!((node_a - 21.322).abs() / 21.322 < 0.01, "{node_a}");
    assert!((node_b - 12.813).abs() / 12.813 < 0.01, "{node_b}");
}

#[test]
fn predict_uniform_tree() {
    let ws = Workspace::new();
    let file = ws.file("tree.adt", TREE);
    let v = json_ok(&dragen(&["predict", "-f", p(&file), "--root", "Tree", "--size", "10"]));
    let node = v["expected"]["Tree.Node"].as_f64().unwrap();
    assert!((node - 0.4997).abs() / 0.4997 < 1e-3);
    assert!(v["extinction"]["Tree"].as_f64().unwrap() > 0.99);
}

#[test]
fn optimize_then_sample_and_verify() {
    let ws = Workspace::new();
    let file = ws.file("tree.adt", TREE);
    let out = dragen(&["optimize", "-f", p(&file), "--root", "Tree", "--size", "10", "--cost", "without(Tree.LeafC)"]);
    let doc = json_ok(&out);
    assert_eq!(doc["spec"]["probabilities"]["Tree.LeafC"], 0.0);
    assert!(doc["trace"]["moves"].as_u64().unwrap() > 0);
    let spec = ws.file("spec.json", &String::from_utf8(out.stdout).unwrap());

    let a = dragen(&["sample", "--spec", p(&spec), "--count", "5", "--seed", "9"]);
    let b = dragen(&["sample", "--spec", p(&spec), "--count", "5", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(!text.contains("LeafC"));

    let json_lines = dragen(&["sample", "--spec", p(&spec), "--count", "3", "--format", "json"]);
    for line in String::from_utf8(json_lines.stdout).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["con"].as_str().unwrap().starts_with("Tree."));
    }

    let report = json_ok(&dragen(&["verify", "--spec", p(&spec), "--count", "20000", "--seed", "3"]));
    assert_eq!(report["pass"], true);
    let sigmas = report["sigmas"].as_f64().unwrap();
    for row in report["rows"].as_array().unwrap() {
        let pred = row["predicted"].as_f64().unwrap();
        let obs = row["observed"].as_f64().unwrap();
        let se = row["stdErr"].as_f64().unwrap();
        assert_eq!(row["pass"].as_bool().unwrap(), (obs - pred).abs() <= sigmas * se + 1e-9);
    }
    assert_eq!(report["stats"]["meanCounts"]["Tree.LeafC"], 0.0);
}

#[test]
fn seed_falls_back_to_environment() {
    let ws = Workspace::new();
    let file = ws.file("tree.adt", TREE);
    let args = ["sample", "-f", p(&file), "--root", "Tree", "--count", "4"];
    let with_env = Command::new(env!("CARGO_BIN_EXE_dragen"))
        .args(args)
        .env("DRAGEN_SEED", "17")
        .output()
        .unwrap();
    let mut explicit: Vec<&str> = args.to_vec();
    explicit.extend(["--seed", "17"]);
    assert_eq!(with_env.stdout, dragen(&explicit).stdout);
}

#[test]
fn impossible_constraint_is_a_domain_error() {
    let ws = Workspace::new();
    let file = ws.file("tree.adt", TREE);
    let out = dragen(&["optimize", "-f", p(&file), "--root", "Tree", "--cost", "without(Tree.LeafA,Tree.LeafB,Tree.LeafC)"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn single_constructor_universe_gives_trivial_spec() {
    let ws = Workspace::new();
    let file = ws.file("u.adt", "data U = Only\n");
    let doc = json_ok(&dragen(&["optimize", "-f", p(&file), "--root", "U", "--size", "3"]));
    assert_eq!(doc["spec"]["probabilities"]["U.Only"], 1.0);
    assert_eq!(doc["trace"]["moves"], 0);
}

#[test]
fn megadeth_histogram_is_concentrated() {
    let ws = Workspace::new();
    let file = ws.file("tree.adt", TREE);
    let mega = dragen(&["histogram", "-f", p(&file), "--root", "Tree", "--strategy", "megadeth", "--count", "5000"]);
    assert_eq!(mega.status.code(), Some(0));
    let csv = String::from_utf8(mega.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("constructors,count"));
    let rows: Vec<(u64, u64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.iter().map(|r| r.1).sum::<u64>(), 5000);
    let small: u64 = rows.iter().filter(|r| r.0 <= 5).map(|r| r.1).sum();
    assert!(small as f64 / 5000.0 >= 0.6);
}

#[test]
fn derive_sampling_reports_aborts() {
    let ws = Workspace::new();
    let file = ws.file("t.adt", "data T = A | B T T | C T T\n");
    let out = dragen(&["sample", "-f", p(&file), "--root", "T", "--strategy", "derive", "--budget", "1000", "--count", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let aborted = text.lines().filter(|l| *l == "#budget-exhausted").count();
    assert!(aborted > 0 && aborted < 40);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exhausted"));
}

#[test]
fn spec_for_another_universe_is_rejected() {
    let ws = Workspace::new();
    let tree = ws.file("tree.adt", TREE);
    let out = dragen(&["optimize", "-f", p(&tree), "--root", "Tree", "--size", "4"]);
    let spec = ws.file("spec.json", &String::from_utf8(out.stdout).unwrap());
    let other = ws.file("other.adt", "data Tree = LeafA | LeafB | LeafC | Node Tree Tree Tree\n");
    let out = dragen(&["sample", "--spec", p(&spec), "-f", p(&other)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn five_cost_functions() {
    let ws = Workspace::new();
    let file = ws.file("tree.adt", TREE);
    let costs = [
        ("uniform", vec![]),
        ("weighted(Tree.LeafA=3,Tree.LeafB=1,Tree.LeafC=1)", vec![]),
        ("weighted(Tree.LeafA=1,Tree.Node=3)", vec![]),
        ("only(Tree.LeafA,Tree.Node)", vec!["Tree.LeafB", "Tree.LeafC"]),
        ("without(Tree.LeafC)", vec!["Tree.LeafC"]),
    ];
    for (cost, zeros) in costs {
        let doc = json_ok(&dragen(&["optimize", "-f", p(&file), "--root", "Tree", "--size", "10", "--cost", cost]));
        for z in zeros {
            assert_eq!(doc["prediction"]["expected"][z], 0.0, "{cost}");
        }
        let node = doc["prediction"]["expected"]["Tree.Node"].as_f64().unwrap();
        assert!(node > 5.0, "{cost}: {node}");
    }
}
