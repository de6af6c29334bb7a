//! Scenario plumbing: config defaults, run orchestration, emission,
//! determinism and schema conformance.

use std::path::Path;

use finsler_core::fermat::jacobi::Character;
use finsler_core::scenario::config::Analysis;
use finsler_core::scenario::emit::CSV_FILES;
use finsler_core::scenario::{emit, load_config, parse_config, run, Format};
use jsonschema::JSONSchema;
use serde_json::Value;

fn repo(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn schema(name: &str) -> JSONSchema {
    let text = std::fs::read_to_string(repo(&format!("schema/{name}"))).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    JSONSchema::compile(&v).unwrap()
}

fn assert_valid(s: &JSONSchema, v: &Value) {
    if let Err(errs) = s.validate(v) {
        let msgs: Vec<String> = errs.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    }
}

fn fermat_report(report: &Value) -> &Value {
    report["analyses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["analysis"] == "fermat")
        .map(|a| &a["result"]["report"])
        .unwrap()
}

#[test]
fn validate_only_minkowski_passes() {
    let cfg = parse_config(r#"{"model": "minkowski", "analyses": ["validate"]}"#).unwrap();
    let art = run(&cfg).unwrap();
    assert_eq!(art.report.failed, 0);
    let v = art.report.outcome(Analysis::Validate).unwrap();
    assert!(v.ok);
    assert_eq!(v.result.as_ref().unwrap()["samples"], 200);
}

#[test]
fn minkowski_null_scenario_and_schema() {
    let cfg = load_config(repo("scenarios/minkowski_null.json")).unwrap();
    let art = run(&cfg).unwrap();
    assert_eq!(art.report.failed, 0, "{}", art.report.to_json());
    let json: Value = serde_json::from_str(&art.report.to_json()).unwrap();
    assert_valid(&schema("run_report.schema.json"), &json);
    assert_valid(&schema("scenario.schema.json"), &json["config"]);
    let r = fermat_report(&json);
    assert!((r["tau"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(r["character"], "local_min");

    // Tampering is caught: an extra key in the fixed-shape record.
    let mut bad = json.clone();
    let pos = bad["analyses"].as_array().unwrap().iter().position(|a| a["analysis"] == "fermat").unwrap();
    bad["analyses"][pos]["result"]["report"]["extra"] = Value::from(1);
    assert!(!schema("run_report.schema.json").is_valid(&bad));
}

#[test]
fn every_shipped_scenario_matches_the_config_schema() {
    let s = schema("scenario.schema.json");
    for entry in std::fs::read_dir(repo("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_valid(&s, &v);
        load_config(&path).unwrap();
    }
}

#[test]
fn long_arc_is_a_saddle_with_index_one() {
    let cfg = load_config(repo("scenarios/sphere_long_arc.json")).unwrap();
    let art = run(&cfg).unwrap();
    assert_eq!(art.report.failed, 0);
    let json: Value = serde_json::to_value(&art.report).unwrap();
    let r = fermat_report(&json);
    assert_eq!(r["morse_index"], 1);
    assert_eq!(r["character"], serde_json::to_value(Character::Saddle).unwrap());
    assert_valid(&schema("run_report.schema.json"), &json);
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = load_config(repo("scenarios/sphere_short_arc.json")).unwrap();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit(&a, da.path(), &[Format::Json, Format::CsvBundle]).unwrap();
    emit(&b, db.path(), &[Format::Json, Format::CsvBundle]).unwrap();
    for f in CSV_FILES.iter().chain(["report.json"].iter()) {
        let x = std::fs::read(da.path().join(f)).unwrap();
        let y = std::fs::read(db.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn empty_analyses_emit_header_only_csvs() {
    let cfg = parse_config(r#"{"model": "minkowski", "analyses": []}"#).unwrap();
    let art = run(&cfg).unwrap();
    assert!(art.report.analyses.is_empty());
    let dir = tempfile::tempdir().unwrap();
    emit(&art, dir.path(), &[Format::Json, Format::CsvBundle]).unwrap();
    for f in CSV_FILES {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().count(), 1, "{f}: {text}");
    }
}

#[test]
fn tau_sweep_csv_has_interior_minimum_at_zero() {
    let cfg = load_config(repo("scenarios/sphere_short_arc.json")).unwrap();
    let art = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit(&art, dir.path(), &[Format::CsvBundle]).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("tau_sweep.csv")).unwrap();
    let rows: Vec<(f64, f64)> = rd
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 21);
    let (k, _) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    assert_eq!(k, 10, "minimum at eps = {}", rows[k].0);
    assert!(rows[k].0.abs() < 1e-15);
    // Parabola through the three central samples: positive curvature, vertex
    // well inside the central cell (the cubic term shifts it by O(h²)).
    let h = rows[11].0 - rows[10].0;
    let d1 = (rows[11].1 - rows[9].1) / (2.0 * h);
    let d2 = (rows[11].1 - 2.0 * rows[10].1 + rows[9].1) / (h * h);
    assert!(d2 > 0.0);
    let vertex = -d1 / d2;
    assert!(vertex.abs() < 0.1 * h, "vertex at {vertex}");
}

#[test]
fn failures_are_recorded_and_the_run_continues() {
    // No observer: fermat fails, jacobi then lacks a geodesic, validate still runs.
    let cfg = parse_config(r#"{"model": "minkowski", "analyses": ["validate", "jacobi", "fermat"]}"#).unwrap();
    let art = run(&cfg).unwrap();
    let names: Vec<Analysis> = art.report.analyses.iter().map(|o| o.analysis).collect();
    assert_eq!(names, vec![Analysis::Fermat, Analysis::Jacobi, Analysis::Validate]);
    assert_eq!(art.report.failed, 2);
    assert!(art.report.outcome(Analysis::Validate).unwrap().ok);
    assert_eq!(art.report.outcome(Analysis::Fermat).unwrap().error.as_ref().unwrap().kind, "BadParameter");
}

#[test]
fn config_errors() {
    assert_eq!(parse_config(r#"{"model": "nope"}"#).unwrap_err().kind(), "UnknownModel");
    assert_eq!(
        parse_config(r#"{"model": "minkowski", "surprise": 1}"#).unwrap_err().kind(),
        "ParseError"
    );
    assert_eq!(
        parse_config(r#"{"model": "minkowski", "q": [0, 0]}"#).unwrap_err().kind(),
        "BadParameter"
    );
}
