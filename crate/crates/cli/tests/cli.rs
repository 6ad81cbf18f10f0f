use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

const EXAMPLE: &str = "sqrt(exp(x2)+u^2)";
const PERTURBED: &str = "sqrt(exp(x2)+u^2)+0.1*x1*u^3/(1+u^2)";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landsberg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn verdict(args: &[&str]) -> String {
    let mut a = args.to_vec();
    a.push("--json");
    let o = run(&a);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    json(&o)["report"]["verdict"].as_str().unwrap().to_string()
}

#[test]
fn eval_reports_the_example_spray() {
    let o = run(&["eval", "-f", EXAMPLE, "-p", "0,0,1,0.5", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &json(&o)["report"];
    let f1 = r["f1"]["du"][0].as_f64().unwrap();
    assert!((f1 - 0.25).abs() < 1e-12, "{f1}");
    let text = stdout(&run(&["eval", "-f", EXAMPLE, "-p", "0,0,1,0.5"]));
    assert!(text.contains("f1, f1', f1'', f1'''   [0.25,"), "{text}");
}

#[test]
fn euclidean_eval_has_no_curvature() {
    let o = run(&[
        "eval",
        "-f",
        "sqrt(1+u^2)",
        "-p",
        "0.3,-0.2,0.8,0.6",
        "--json",
    ]);
    let r = &json(&o)["report"];
    for k in ["landsberg_residual", "berwald_norm"] {
        assert!(r[k].as_f64().unwrap().abs() < 1e-14, "{k}");
    }
    for v in r["curvature"].as_array().unwrap() {
        assert!(v.as_f64().unwrap().abs() < 1e-14);
    }
}

#[test]
fn chart_and_parse_errors_are_usage_errors() {
    let o = run(&["eval", "-f", EXAMPLE, "-p", "0,0,0,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "-f", "sqrt(exp(x2)+u^^2)", "-p", "0,0,1,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains('^'),
        "span marker missing: {}",
        stderr(&o)
    );
    assert_eq!(run(&["classify"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "Z"]).status.code(), Some(2));
}

#[test]
fn undefined_closed_form_is_a_domain_error() {
    let o = run(&[
        "family",
        "--family",
        "phi2",
        "--a",
        "1",
        "--b",
        "0.5",
        "--closed-form",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn classify_verdicts() {
    assert_eq!(verdict(&["classify", "-f", EXAMPLE]), "berwald");
    assert_eq!(
        verdict(&[
            "classify", "--family", "phi1", "--c1", "1", "--c2", "1", "--c3", "0", "--rho",
            "exp(x1)"
        ]),
        "berwald"
    );
    assert_eq!(verdict(&["classify", "-f", PERTURBED]), "non_landsberg");
    assert_eq!(verdict(&["classify", "-f", "1+0.2*u"]), "degenerate");
}

#[test]
fn family_reports_window_and_fit() {
    let o = run(&[
        "family", "--family", "phi2", "--a", "0.3", "--b", "1.5", "--rho", "exp(x1)", "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &json(&o)["report"];
    assert_eq!(r["classification"]["verdict"], "berwald");
    assert!(r["closed_form"]["fit"]["max_rel_error"].as_f64().unwrap() < 1e-6);
    assert!(r["ode_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn verify_exit_codes() {
    let o = run(&["verify", "paper"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let o = run(&["verify", "roundtrip"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn config_echo_reproduces_json() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "classify",
        "-f",
        PERTURBED,
        "--grid",
        "4,3,5",
        "--xbox",
        "-0.5,1,0,2",
        "--seed",
        "9",
        "--json",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0));
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, stderr(&first)).unwrap();
    let again = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    assert_eq!(first.stdout, again.stdout);
    assert_eq!(stderr(&first), stderr(&again));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!("metric = {EXAMPLE}\ngrid = 2,2,2\nseed = 1\n"),
    )
    .unwrap();
    let o = run(&[
        "classify",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--json",
    ]);
    let v = json(&o);
    assert_eq!(v["config"]["seed"], "4");
    assert_eq!(v["report"]["samples"], 8);
    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(
        run(&["classify", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn csv_and_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let report = dir.path().join("report.json");
    let o = run(&[
        "classify",
        "-f",
        EXAMPLE,
        "--grid",
        "2,2,3",
        "--csv",
        csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "index,x1,x2,y1,y2,status,finsler,det_g,berwald,landsberg,metricity"
    );
    assert_eq!(lines.len(), 13);
    // 17 significant digits survive a round trip
    let x1: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(format!("{x1:.16e}"), lines[1].split(',').nth(1).unwrap());
    let saved: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(saved["report"]["verdict"], "berwald");
}
