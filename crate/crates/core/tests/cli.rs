use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bruhat-control"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const DIAG: &str = r#"[[["5","0"],["0","1/5"]]]"#;

#[test]
fn diagonal_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let gens = write(dir.path(), "gens.json", DIAG);
    let dot = dir.path().join("orbit.dot");
    let out = run(&[
        "control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", &gens,
        "--dot", dot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["seed"], 0);
    assert_eq!(v["control_sets"].as_array().unwrap().len(), 2);
    assert_eq!(v["weyl_subgroup"], serde_json::json!(["e"]));
    let d = std::fs::read_to_string(dot).unwrap();
    assert_eq!(d.lines().filter(|l| l.contains("->")).count(), v["edge_count"].as_u64().unwrap() as usize);
    assert_eq!(d.lines().filter(|l| l.ends_with(";") && !l.contains("->")).count(), 6);
    assert_eq!(d.matches("doublecircle").count(), 1);
}

#[test]
fn spec_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"p":5,"precision":1,"group":"SL2","generators":[[["5","0"],["0","1/5"]],[[0,1],[-1,0]]],"max_word_len":3}"#,
    );
    let report = dir.path().join("report.json");
    let out = run(&["control-sets", "--spec", &spec, "--output", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["control_sets"].as_array().unwrap().len(), 1);
    assert_eq!(v["weyl_subgroup"].as_array().unwrap().len(), 2);
}

#[test]
fn tree_classify_elliptic() {
    let out = run(&["tree", "--p", "5", "classify", "--matrix", "[[0,1],[-1,0]]"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["kind"], "Elliptic");
}

#[test]
fn rotation_is_open_subgroup() {
    let out = run(&["control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", "[[[0,1],[-1,0]]]"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        json(&out)["classification"],
        "no hyperbolic witness; semigroup classifies as open subgroup"
    );
}

#[test]
fn input_errors_exit_one_and_name_the_field() {
    let cases: [(&[&str], &str); 4] = [
        (&["control-sets", "--p", "6", "--precision", "1", "--group", "SL2", "--gens", DIAG], "p"),
        (&["control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", "[[[5,0],[0,1]]]"], "generators[0]"),
        (&["control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", "[[[5,0"], "generators"),
        (&["control-sets", "--p", "5", "--precision", "1", "--group", "SL4", "--gens", DIAG], "group"),
    ];
    let mut messages = Vec::new();
    for (args, field) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(field), "{err}");
        messages.push(err);
    }
    messages.sort();
    messages.dedup();
    assert_eq!(messages.len(), 4);
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str| -> Vec<String> {
        [
            "--seed", "7", "control-sets", "--p", "3", "--precision", "1", "--group", "SL3",
            "--gens", r#"[[["1/3",0,0],[0,1,0],[0,0,3]]]"#, "--dot",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain([dir.path().join(name).to_str().unwrap().to_string()])
        .collect()
    };
    let a = bin().args(args("a.dot")).output().unwrap();
    let b = bin().args(args("b.dot")).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        std::fs::read(dir.path().join("a.dot")).unwrap(),
        std::fs::read(dir.path().join("b.dot")).unwrap()
    );
    assert_eq!(json(&a)["seed"], 7);
}

#[test]
fn other_subcommands() {
    let v = json(&run(&["padic", "--p", "5", "--precision", "3", "invert", "3"]));
    assert_eq!(v["value"]["digits"], serde_json::json!([2, 3, 1]));
    let v = json(&run(&["weyl", "--n", "3", "elements"]));
    assert_eq!(v["order"], 6);
    let v = json(&run(&["weyl", "--n", "3", "cosets", "--j", "1"]));
    assert_eq!(v["count"], 3);
    let v = json(&run(&["flag", "--p", "5", "--precision", "3", "census", "--n", "2"]));
    assert_eq!(v["total"], 150);
    assert_eq!(v["counts"]["r1"], 149);
    let v = json(&run(&["decomp", "--p", "5", "--matrix", r#"[[25,0],[0,"1/25"]]"#, "cartan"]));
    assert_eq!(v["exponents"], serde_json::json!([-2, 2]));
    let v = json(&run(&["tree", "--p", "5", "distance", "--u", "(0, 0, 0)", "--v", "(2, 0, 0)"]));
    assert_eq!(v["distance"], 2);
    let out = run(&["flag", "--p", "5", "--precision", "2", "act", "--matrix", "[[5,0],[0,1]]", "--flag", "[1:0]"]);
    assert_eq!(out.status.code(), Some(0));
}
