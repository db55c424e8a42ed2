use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qltorus"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn verify_quartic_one_matches_golden() {
    let o = run(&["--json", "verify", data("quartic1.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("verify_quartic1.json"));
}

#[test]
fn json_field_order_is_fixed() {
    let o = run(&["--json", "verify", data("quartic1.toml").to_str().unwrap()]);
    let text = stdout(&o);
    let pos: Vec<usize> = ["\"entry\"", "\"checks\"", "\"tower\"", "\"class\""].iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn perturbed_coefficient_exits_one_with_named_check() {
    let doc = std::fs::read_to_string(data("quartic1.toml")).unwrap().replace("t*Y^3*Z", "2*t*Y^3*Z");
    let f = write_temp(&doc);
    let o = run(&["--json", "verify", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["identity"]);
}

#[test]
fn malformed_input_exits_two_with_position() {
    let f = write_temp("kind = \"visible23\"\ncurve = \"X^2 + * Y\"\na = \"X\"\nb = \"Y\"\n");
    let o = run(&["verify", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("column"), "{err}");
    let o = run(&["verify", "/nonexistent/doc.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["classify", "X^4 +"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invisible24_document_verifies() {
    let o = run(&["verify", data("invisible24_q19.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn classify_examples() {
    let o = run(&["--json", "classify", "Y^3*Z + X^4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("classify_y3z_x4.json"));

    let o = run(&["--json", "classify", data("three_cusp.txt").to_str().unwrap(), "--tower", "r3: minpoly = r3^2 - 3"]);
    let v = json(&o);
    assert_eq!(v["class"]["index"], 5);
    assert_eq!(v["class"]["signature"], "3a2");
    assert_eq!(v["class"]["infinity"], "(i)");

    let o = run(&["--json", "classify", "X^4 + Y^4 + Z^4"]);
    let v = json(&o);
    assert_eq!(v["class"]["index"], Value::Null);
    assert_eq!(v["class"]["points"].as_array().unwrap().len(), 0);
    let o = run(&["classify", "X^4 + Y^4 + Z^4"]);
    assert!(stdout(&o).contains("class: none"));
}

#[test]
fn classify_document_at_parameter_value() {
    let o = run(&["--json", "classify", data("quartic1.toml").to_str().unwrap(), "--params", "t=1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["class"]["index"], 1);
}

#[test]
fn solve_quartic_one_has_one_solution() {
    let o = run(&["solve", data("solve_quartic1.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("solutions: 1 found"), "{text}");
    assert!(text.contains("s1^3 = t"), "{text}");
}

#[test]
fn quasi_chain_levels() {
    let path = data("quasi_three_cusp.toml");
    let o = run(&["quasi", path.to_str().unwrap(), "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("g2: ") && !text.contains("g3: "), "{text}");
    assert!(text.contains("chain.level 1"));

    let o = run(&["quasi", path.to_str().unwrap(), "--steps", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("g0: ") && !text.contains("g1: "), "{text}");

    let wrong = std::fs::read_to_string(&path).unwrap().replace("h0 = \"I*r3*", "h0 = \"2*I*r3*");
    let f = write_temp(&wrong);
    let o = run(&["quasi", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("base identity"));
}

#[test]
fn degenerate_spot_checks() {
    for (fam, params, class) in [("1", "s=0,t=0,u=0", "12"), ("1", "s=0,t=1,u=0", "11"), ("4", "s=0,t=0", "10"), ("3", "s=0,t=0", "9")] {
        let o = run(&["degenerate", "--family", fam, "--params", params, "--expect", class]);
        assert_eq!(o.status.code(), Some(0), "family {fam} at {params}: {}", stdout(&o));
    }
    let o = run(&["degenerate", "--family", "1", "--params", "s=0,t=1,u=0", "--expect", "12"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["degenerate", "--family", "1", "--params", "s=0,t=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["degenerate", "--family", "9", "--params", "s=0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn best_effort_family_is_tagged() {
    let o = run(&["--json", "degenerate", "--family", "2", "--params", "s=0,t=2,u=3", "--expect", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["checks"][0]["name"], "best-effort");
    assert_eq!(v["checks"][0]["status"], "waived");
}

#[test]
fn catalog_list_contents() {
    let o = run(&["catalog", "list"]);
    let text = stdout(&o);
    let line = |id: &str| text.lines().find(|l| l.split_whitespace().next() == Some(id)).unwrap_or_else(|| panic!("{id} missing")).to_string();
    assert!(line("Q1").contains("irreducible quartic: two cusps, bitangent"));
    assert!(line("Q18").contains("reducible quartic: two conics with an a7"));
    assert!(line("S9-example").contains("quasi"));
    assert!(line("Fam2").contains("[best-effort]"));
    let v: Value = json(&run(&["--json", "catalog", "list"]));
    assert!(v.as_array().unwrap().len() >= 22);
}

#[test]
fn catalog_signature_only_entry() {
    let o = run(&["--json", "catalog", "verify", "Q13"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("catalog_q13.json"));
}

#[test]
fn catalog_unknown_entry_and_bad_arguments() {
    assert_eq!(run(&["catalog", "verify", "Q99"]).status.code(), Some(2));
    assert_eq!(run(&["catalog", "verify"]).status.code(), Some(2));
}

#[test]
fn catalog_verify_all_is_deterministic_across_worker_counts() {
    let one = bin().env("QLTORUS_WORKERS", "1").args(["--json", "catalog", "verify", "--all"]).output().unwrap();
    let four = bin().env("QLTORUS_WORKERS", "4").args(["--json", "catalog", "verify", "--all"]).output().unwrap();
    assert_eq!(one.status.code(), Some(0), "{}", stdout(&one));
    assert_eq!(one.stdout, four.stdout);
    let v = json(&one);
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["entry"].as_str().unwrap()).collect();
    assert_eq!(ids.first(), Some(&"Q1"));
    assert!(ids.contains(&"Q5-In2") && ids.contains(&"Fam4"));
}
