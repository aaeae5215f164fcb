//! End-to-end runs of the `nnf2sdd` binary: exit codes, written files and
//! JSON reports checked against the shipped schema.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_nnf2sdd");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("spawn nnf2sdd")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn schema() -> jsonschema::JSONSchema {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schemas/report.schema.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

fn json_report(o: &Output) -> Value {
    let v: Value = serde_json::from_slice(&o.stdout).expect("stdout is JSON");
    let s = schema();
    if let Err(errors) = s.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("report does not match schema: {:?}\n{}", msgs, v);
    }
    v
}

/// x1 ∧ ¬x2, a deterministic complement, and the vtree (1 2).
fn toy(dir: &Path) {
    std::fs::write(dir.join("a.nnf"), "nnf 3 2 2\nL 1\nL -2\nA 2 0 1\n").unwrap();
    std::fs::write(dir.join("b.nnf"), "nnf 5 4 2\nL -1\nL 1\nL 2\nA 2 1 2\nO 2 0 3\n").unwrap();
    std::fs::write(dir.join("t.vtree"), "vtree 3\nL 0 1\nL 1 2\nI 2 0 1\n").unwrap();
}

#[test]
fn validate_hwb_circuit() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["gen-hwb", "--n", "10", "--out-prefix", "h"])), 0);
    for f in ["h.d.nnf", "h.dbar.nnf", "h.vtree"] {
        assert!(dir.path().join(f).exists(), "{} missing", f);
    }
    let o = run(dir.path(), &["validate", "--props", "decomposable,deterministic", "--circuit", "h.d.nnf"]);
    assert_eq!(code(&o), 0);
    let o = run(
        dir.path(),
        &[
            "--json",
            "validate",
            "--props",
            "decomposable,deterministic,smooth,simple,respects_vtree,respects_vtree_oriented",
            "--circuit",
            "h.dbar.nnf",
            "--vtree",
            "h.vtree",
        ],
    );
    assert_eq!(code(&o), 0);
    let v = json_report(&o);
    assert_eq!(v["exit_code"], 0);
    assert_eq!(v["reports"].as_array().unwrap().len(), 6);
}

#[test]
fn simulate_then_validate_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let o = run(dir.path(), &["simulate", "--circuit", "a.nnf", "--circuit2", "b.nnf", "--vtree", "t.vtree", "--out", "s.nnf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["s.nnf", "s.vtree", "trace.json", "s.d.nnf", "s.dbar.nnf", "s.base.vtree"] {
        assert!(dir.path().join(f).exists(), "{} missing", f);
    }
    assert_eq!(code(&run(dir.path(), &["validate", "--props", "sdd", "--circuit", "s.nnf"])), 0);
    assert_eq!(code(&run(dir.path(), &["equiv", "--circuit", "s.nnf", "--circuit2", "a.nnf", "--modulo-aux"])), 0);
    assert_eq!(code(&run(dir.path(), &["equiv", "--circuit", "a.nnf", "--circuit2", "b.nnf", "--complement"])), 0);

    let trace: Value = serde_json::from_slice(&std::fs::read(dir.path().join("trace.json")).unwrap()).unwrap();
    assert!(trace["key_map"].as_array().is_some_and(|k| !k.is_empty()));
}

#[test]
fn simulate_hwb_output_is_an_sdd() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["gen-hwb", "--n", "10", "--out-prefix", "h"])), 0);
    let o = run(
        dir.path(),
        &["--json", "simulate", "--circuit", "h.d.nnf", "--circuit2", "h.dbar.nnf", "--vtree", "h.vtree", "--out", "s.nnf"],
    );
    assert_eq!(code(&o), 0);
    let v = json_report(&o);
    assert!(v["data"]["aux_vars"].as_u64().unwrap() > 0);
    let o = run(dir.path(), &["--json", "validate", "--props", "sdd", "--circuit", "s.nnf"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_report(&o)["reports"][0]["holds"], true);
    let o = run(dir.path(), &["equiv", "--circuit", "s.nnf", "--circuit2", "h.d.nnf", "--modulo-aux"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn violations_exit_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    // x1 ∨ x2 is not deterministic
    std::fs::write(dir.path().join("or.nnf"), "nnf 3 2 2\nL 1\nL 2\nO 2 0 1\n").unwrap();
    let o = run(dir.path(), &["--json", "validate", "--props", "deterministic", "--circuit", "or.nnf"]);
    assert_eq!(code(&o), 1);
    let v = json_report(&o);
    assert_eq!(v["exit_code"], 1);
    assert_eq!(v["reports"][0]["holds"], false);
    assert!(!v["reports"][0]["witness"].is_null());

    toy(dir.path());
    let o = run(dir.path(), &["--json", "equiv", "--circuit", "a.nnf", "--circuit2", "b.nnf"]);
    assert_eq!(code(&o), 1);
    let v = json_report(&o);
    assert_eq!(v["data"]["equivalent"], false);
    assert!(v["data"]["counterexample"].is_object());
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["bogus"])), 2);
    assert_eq!(code(&run(dir.path(), &["count"])), 2);
    assert_eq!(code(&run(dir.path(), &["count", "--circuit", "missing.nnf"])), 2);

    std::fs::write(dir.path().join("bad.nnf"), "nnf 2 1 1\nL 1\nA 2 0 5\n").unwrap();
    let o = run(dir.path(), &["--json", "count", "--circuit", "bad.nnf"]);
    assert_eq!(code(&o), 2);
    let v = json_report(&o);
    assert_eq!(v["exit_code"], 2);
    assert!(v["error"].as_str().unwrap().contains("line 3"), "{}", v["error"]);

    toy(dir.path());
    let o = run(dir.path(), &["restrict", "--circuit", "a.nnf", "--vtree", "t.vtree", "--assign", "1=x", "--out", "r.nnf"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn counting_restricting_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let o = run(dir.path(), &["--json", "count", "--circuit", "b.nnf"]);
    assert_eq!(code(&o), 0);
    let v = json_report(&o);
    assert_eq!(v["data"]["models"], 3);

    let o = run(dir.path(), &["restrict", "--circuit", "b.nnf", "--vtree", "t.vtree", "--assign", "1=1", "--out", "r.nnf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("r.nnf").exists());

    let o = run(dir.path(), &["--json", "stats", "--circuit", "b.nnf", "--vtree", "t.vtree"]);
    assert_eq!(code(&o), 0);
    json_report(&o);

    let o = run(dir.path(), &["--json", "subfuncs", "--circuit", "b.nnf", "--fixed-set", "1"]);
    assert_eq!(code(&o), 0);
    json_report(&o);

    for args in [
        &["--json", "simplify", "--circuit", "b.nnf", "--out", "s.nnf"][..],
        &["--json", "smooth", "--circuit", "b.nnf", "--vtree", "t.vtree", "--out", "m.nnf", "--complete"][..],
    ] {
        let o = run(dir.path(), args);
        assert_eq!(code(&o), 0);
        json_report(&o);
    }
    assert_eq!(code(&run(dir.path(), &["equiv", "--circuit", "b.nnf", "--circuit2", "m.nnf"])), 0);
}

#[test]
fn separation_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--json", "separation", "--n", "10,20", "--csv", "sep.csv"]);
    assert_eq!(code(&o), 0);
    json_report(&o);
    let csv = std::fs::read_to_string(dir.path().join("sep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,size_d,size_dbar,subfunctions,bound,note"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            toy(dir.path());
            let o = run(
                dir.path(),
                &["simulate", "--circuit", "a.nnf", "--circuit2", "b.nnf", "--vtree", "t.vtree", "--out", "s.nnf", "--seed", "9"],
            );
            assert_eq!(code(&o), 0);
            ["s.nnf", "s.vtree", "trace.json"]
                .iter()
                .flat_map(|f| std::fs::read(dir.path().join(f)).unwrap())
                .collect()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}
