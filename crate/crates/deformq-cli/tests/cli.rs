use std::path::PathBuf;
use std::process::{Command, Output};

use deformq_cli::{emit_report, run_scenario, Format, Kind, Scenario};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deformq"))
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", "v1", name].iter().collect();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report is json")
}

fn tmp(name: &str, body: &str) -> String {
    let dir = std::env::temp_dir().join(format!("deformq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn fixtures_pass() {
    for f in [
        "table_cosmocom.json",
        "table_bhcom.json",
        "geometry_schwarzschild.json",
        "geometry_desitter.json",
        "green_words.json",
        "spectrum.json",
        "loop.json",
        "identity_series.json",
        "identity_associativity.json",
        "identity_empty.json",
    ] {
        let o = run(&["verify", &fixture(f)]);
        assert_eq!(code(&o), 0, "{f}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn fixtures_parse_strictly() {
    for e in std::fs::read_dir(fixture("")).unwrap() {
        let text = std::fs::read_to_string(e.unwrap().path()).unwrap();
        let sc: Scenario = serde_json::from_str(&text).unwrap();
        assert!(sc.source.is_some());
    }
}

#[test]
fn reports_are_deterministic() {
    for args in [
        vec!["verify", "__series"],
        vec!["table", "cosmocom", "--format", "markdown"],
        vec!["spectrum", "--lambda", "0.2"],
    ] {
        let series = fixture("identity_series.json");
        let args: Vec<&str> = args.iter().map(|a| if *a == "__series" { series.as_str() } else { a }).collect();
        let a = run(&args);
        let b = run(&args);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_is_recorded_and_overridable() {
    let o = run(&["verify", &fixture("identity_series.json"), "--seed", "99"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["seed"], 99);
}

#[test]
fn table_has_one_row_per_family() {
    for (target, n) in [("cosmocom", 5), ("bhcom", 5), ("C22", 1), ("B12", 1)] {
        let o = run(&["table", target, "--format", "markdown"]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(o.stdout).unwrap();
        let rows = text.lines().filter(|l| (l.starts_with("| C") || l.starts_with("| B")) && !l.contains('/')).count();
        assert_eq!(rows, n, "{target}");
    }
}

#[test]
fn series_are_encoded_as_rational_pairs() {
    let o = run(&["verify", &fixture("identity_series.json")]);
    let v = json(&o);
    assert_eq!(v["data"]["series"], serde_json::json!({ "coeffs": [["1", "0"], ["0", "1"]] }));
}

#[test]
fn empty_check_list_passes() {
    let o = run(&["verify", &fixture("identity_empty.json")]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["checks"], serde_json::json!([]));
}

#[test]
fn config_errors_exit_two() {
    let cases = [
        run(&["table", "C99"]),
        run(&["geometry", "flat-torus"]),
        run(&["green", "nowhere"]),
        run(&["geometry", "moyal-minkowski", "--order", "0"]),
        run(&["spectrum", "--lambda", "-1"]),
        run(&["loop", "--beta", "0"]),
        run(&["verify", "/nonexistent/scenario.json"]),
        run(&["verify", &tmp("bad.json", "{ not json")]),
        run(&["verify", &tmp("extra.json", r#"{"kind":"identity","checks":[],"colour":"red"}"#)]),
        run(&["verify", &tmp("check.json", r#"{"kind":"identity","checks":["no-such-check"]}"#)]),
        run(&["verify", &tmp("param.json", r#"{"kind":"loop","params":{"gamma":1.0}}"#)]),
        run(&["verify", &tmp("notarget.json", r#"{"kind":"geometry"}"#)]),
    ];
    for (i, o) in cases.iter().enumerate() {
        assert_eq!(code(o), 2, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn failed_checks_exit_one() {
    // too few grid points for the mode solver
    let p = tmp("coarse.json", r#"{"kind":"green","target":"kappa-minkowski","order":1,"params":{"points":64}}"#);
    let o = run(&["verify", &p]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("deformq-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("r.md");
    let o = run(&["spectrum", "--kmax", "1", "--format", "markdown", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&p).unwrap().contains("| 1.00 |"));
}

#[test]
fn library_and_binary_agree() {
    let mut sc = Scenario::new(Kind::Loop);
    sc.params.insert("beta".into(), 0.5);
    sc.params.insert("ratio".into(), 1.0);
    let r = run_scenario(&sc).unwrap();
    assert!(r.passed());
    let o = run(&["loop", "--beta", "0.5"]);
    assert_eq!(emit_report(&r, Format::Json), o.stdout);
}

#[test]
fn schwarzschild_killing_is_an_alias() {
    let o = run(&["geometry", "schwarzschild-killing"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["data"]["model"], "schwarzschild-timeradius");
}

#[test]
fn isotropic_model_reports_failed_precondition_but_vanishes() {
    let o = run(&["geometry", "desitter-isotropic", "--order", "3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["data"]["killing_precondition"].is_string());
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["name"] == "einstein-with-lambda"));
}
