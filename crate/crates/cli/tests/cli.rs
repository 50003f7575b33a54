use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn liconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liconf")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = liconf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_spec(dir: &Path) -> std::path::PathBuf {
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"{"domains": ["a", "b"], "n_questions": 60, "m": 12,
            "num_layers": 3, "label_space_size": 4, "answer_distribution_sharpness": 1.5,
            "li_informativeness": 0.8, "freq_informativeness": 0.9, "empty_pool_rate": 0.05}"#,
    )
    .unwrap();
    spec
}

#[test]
fn validate_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("t.jsonl");
    ok(&["synth", "--spec", s(&write_spec(dir.path())), "--seed", "1", "--out", s(&good)]);
    ok(&["validate", s(&good)]);

    let text = std::fs::read_to_string(&good).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut rec: Value = serde_json::from_str(&lines[2]).unwrap();
    rec["responses"][0]["tokens"][0]["logp_ctx"][1] = Value::String("x".into());
    lines[2] = rec.to_string();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, lines.join("\n")).unwrap();

    let out = liconf(&["validate", s(&bad)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("logp_ctx[1]"), "{err}");
    assert!(err.contains('3'), "{err}");
}

#[test]
fn validate_rejects_positive_logp() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("t.jsonl");
    ok(&["synth", "--spec", s(&write_spec(dir.path())), "--seed", "1", "--out", s(&good)]);
    let text = std::fs::read_to_string(&good).unwrap();
    let mut rec: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    rec["responses"][0]["tokens"][0]["logp_null"][0] = Value::from(0.5);
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, rec.to_string()).unwrap();
    assert!(!liconf(&["validate", s(&bad)]).status.success());
}

#[test]
fn synth_writes_truth_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    ok(&["synth", "--spec", s(&write_spec(dir.path())), "--seed", "4", "--out", s(&out)]);
    let truth = read_json(&dir.path().join("t.jsonl.truth.json"));
    assert_eq!(truth["questions"].as_array().unwrap().len(), 120);
    let h = truth["h_y_given_x"].as_f64().unwrap();
    assert!(h > 0.0 && h < 4f64.ln());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 120);
}

#[test]
fn calibrate_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let spec = write_spec(dir.path());
    ok(&["synth", "--spec", s(&spec), "--seed", "2", "--out", s(&p("cal.jsonl"))]);
    ok(&["synth", "--spec", s(&spec), "--seed", "3", "--out", s(&p("test.jsonl"))]);
    ok(&["calibrate", "--trace", s(&p("cal.jsonl")), "--alpha", "0.2", "--out", s(&p("cal.json"))]);

    let cal = read_json(&p("cal.json"));
    for key in ["q_hat", "alpha", "n_cal", "risk_floor", "score_kind", "weights", "ssm_def"] {
        assert!(cal.get(key).is_some(), "missing {key}");
    }
    assert_eq!(cal["n_cal"], 120);
    assert_eq!(cal["alpha"], 0.2);

    ok(&["predict", "--trace", s(&p("test.jsonl")), "--cal", s(&p("cal.json")), "--out", s(&p("sets.json"))]);
    let sets = read_json(&p("sets.json"));
    let sets = sets["sets"].as_array().unwrap();
    assert_eq!(sets.len(), 120);
    for set in sets {
        assert_eq!(set["size"].as_u64().unwrap() as usize, set["members"].as_array().unwrap().len());
    }

    ok(&["evaluate", "--sets", s(&p("sets.json")), "--label-space", "4", "--out", s(&p("metrics.json"))]);
    let m = read_json(&p("metrics.json"));
    let emr = m["metrics"]["emr"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&emr));
    assert!(m["metrics"]["fano_bound"].as_f64().is_some());
    assert!(m["ssm_def"].as_str().unwrap().contains("20"));
}

#[test]
fn calibrate_warns_below_risk_floor() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"domains": ["a"], "n_questions": 100, "m": 10, "num_layers": 2, "label_space_size": 4,
            "answer_distribution_sharpness": 1.0, "li_informativeness": 0.5, "freq_informativeness": 0.9,
            "empty_pool_rate": 0.3}"#,
    )
    .unwrap();
    let trace = dir.path().join("t.jsonl");
    ok(&["synth", "--spec", s(&spec), "--seed", "8", "--out", s(&trace)]);
    let out = ok(&["calibrate", "--trace", s(&trace), "--alpha", "0.05", "--out", s(&dir.path().join("c.json"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("risk floor"));
}

#[test]
fn sweep_crossdomain_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["synth", "--spec", s(&write_spec(dir.path())), "--seed", "5", "--out", s(&p("t.jsonl"))]);
    ok(&["sweep", "--trace", s(&p("t.jsonl")), "--alphas", "0.1,0.3", "--trials", "5", "--out", s(&p("out"))]);
    ok(&["crossdomain", "--trace", s(&p("t.jsonl")), "--alpha", "0.2", "--trials", "5", "--out", s(&p("out"))]);

    let sweep = read_json(&p("out/sweep.json"));
    assert_eq!(sweep["rows"].as_array().unwrap().len(), 6);
    let cross = read_json(&p("out/crossdomain.json"));
    assert_eq!(cross["domains"].as_array().unwrap().len(), 2);

    for format in ["csv", "json", "svg"] {
        ok(&["report", "--in", s(&p("out")), "--format", format, "--out", s(&p(format))]);
        assert!(std::fs::read_dir(p(format)).unwrap().count() > 0, "{format}");
    }
    let svg = std::fs::read_dir(p("svg"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|f| f.file_name().unwrap().to_str().unwrap().contains("emr"))
        .unwrap();
    let cells = std::fs::read_to_string(svg).unwrap().matches(r#"class="cell""#).count();
    assert_eq!(cells, 4);
}

#[test]
fn bad_arguments_fail() {
    assert!(!liconf(&["calibrate", "--trace", "/nonexistent.jsonl", "--alpha", "0.1", "--out", "/tmp/x.json"])
        .status
        .success());
    assert!(!liconf(&["sweep", "--trace", "x", "--scores", "bogus", "--out", "y"]).status.success());
}
