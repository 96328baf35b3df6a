#![allow(clippy::approx_constant)] // table values are quoted to seven digits

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_warpcurv"));
    c.env_remove("WARPCURV_THREADS");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn validate(doc: &Value) {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../reports/schema-v1.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}");
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn list_models_flag_prints_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--list-models"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().collect();
    assert!(names.contains(&"cosh-hyperbolic"));
    assert!(names.contains(&"product-hyperbolic-halfplane"));
    assert_eq!(names.len(), 8);

    let o = run(dir.path(), &["list-models", "--format", "json", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json_out(&o);
    validate(&doc);
    assert_eq!(doc.as_array().unwrap().len(), 8);
}

#[test]
fn half_plane_point_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": "product-hyperbolic-halfplane", "graph": {"builtin": "a_log_y", "params": {"a": 1}}}"#,
    );
    let o = run(dir.path(), &["point", "--config", cfg.to_str().unwrap(), "--x", "0,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json_out(&o);
    validate(&doc);
    let norm_a = doc["normA"].as_f64().unwrap();
    assert!((norm_a - 0.5f64.sqrt()).abs() < 1e-6);
    let mut abs: Vec<f64> = doc["lambdas"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap().abs()).collect();
    abs.sort_by(f64::total_cmp);
    assert!(abs[0] < 1e-6 && (abs[1] - 0.5f64.sqrt()).abs() < 1e-6, "{abs:?}");
}

#[test]
fn slice_graph_point_is_horizontal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": "cosh-hyperbolic", "graph": {"builtin": "slice", "params": {"t0": 0}}, "point": [0.4, 1.7]}"#,
    );
    let o = run(dir.path(), &["point", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json_out(&o);
    assert!(doc["H"].as_f64().unwrap().abs() < 1e-12);
    assert!((doc["theta"].as_f64().unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn point_csv_has_header_and_crlf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": "cosh-hyperbolic", "graph": {"builtin": "bump_hyperbolic"}}"#);
    let o = run(dir.path(), &["point", "--config", cfg.to_str().unwrap(), "--x", "0.1,1.2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("quantity,value\r\n"));
    assert!(text.contains("\r\nH,"));
}

#[test]
fn malformed_psi_is_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["point", "--config", fixture("bad_psi.json").to_str().unwrap(), "--x", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!dir.path().join("never-written.json").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("psi"));
}

#[test]
fn missing_and_unreadable_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["verify"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["verify", "--config", "nope.json"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"model": "cosh-hyperbolic", "bogus": 1}"#);
    assert_eq!(run(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["point", "--bad-flag"]).status.code(), Some(2));
}

#[test]
fn evaluation_error_exits_3_and_names_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": "product-hyperbolic-halfplane", "graph": {"builtin": "a_log_y"}}"#);
    let o = run(dir.path(), &["point", "--config", cfg.to_str().unwrap(), "--x", "0,-1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("-1"));
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().current_dir(dir.path()).env("WARPCURV_THREADS", "zero").arg("--list-models").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().current_dir(dir.path()).env("WARPCURV_THREADS", "2").arg("--list-models").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

fn slice_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t", "H", "Kperp", "sigma_numeric", "sigma_closed", "residual"]
    );
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn slice_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": "cosh-hyperbolic"}"#);
    let o = run(dir.path(), &["slice-table", "--config", cfg.to_str().unwrap(), "--t", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = slice_rows(&String::from_utf8(o.stdout).unwrap());
    let expect = [[0.0, 0.0, -1.0, 1.5707963, 1.5707963], [1.0, 0.7615942, -1.0, 0.7050268, 0.7050268]];
    for (row, e) in rows.iter().zip(expect) {
        for k in 0..5 {
            assert!((f(&row[k]) - e[k]).abs() < 1e-7, "{row:?}");
        }
        assert!(f(&row[5]) < 1e-8);
    }

    let cfg = write_config(dir.path(), r#"{"model": "exp-euclidean"}"#);
    let o = run(dir.path(), &["slice-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = slice_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| (f(&r[1]) - 1.0).abs() < 1e-12));

    let cfg = write_config(dir.path(), r#"{"model": "linear-sphere", "t_grid": [2]}"#);
    let o = run(dir.path(), &["slice-table", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    let doc = json_out(&o);
    validate(&doc);
    assert!((doc[0]["H"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(doc[0]["Kperp"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn slice_table_outside_the_interval_is_nan_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": "sin-sphere"}"#);
    let o = run(dir.path(), &["slice-table", "--config", cfg.to_str().unwrap(), "--t", "1,4"]);
    assert_eq!(o.status.code(), Some(3));
    let rows = slice_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(f(&rows[0][1]).is_finite());
    assert_eq!(rows[1][1], "NaN");
}

#[test]
fn verify_default_suite_passes_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    for model in ["cosh-hyperbolic", "sin-sphere", "product-hyperbolic-halfplane"] {
        let cfg = write_config(dir.path(), &format!(r#"{{"model": "{model}"}}"#));
        let o = run(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{model}: {}", String::from_utf8_lossy(&o.stderr));
        let doc = json_out(&o);
        validate(&doc);
        let n = doc.as_array().unwrap().len();
        assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), n);
    }
}

#[test]
fn mutation_fixture_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--config", fixture("mutation.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let doc = json_out(&o);
    assert!(doc.as_array().unwrap().iter().any(|r| r["verdict"] == "violated"));
}

#[test]
fn output_is_byte_identical_for_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": "cosh-euclidean", "seed": 5,
            "outputs": [{"format": "json", "path": "a.json"}, {"format": "csv", "path": "a.csv"}],
            "verify": {"samples_csv": "samples.csv"}}"#,
    );
    let cfg = cfg.to_str().unwrap();
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    assert_eq!(run(dir.path(), &["verify", "--config", cfg]).status.code(), Some(0));
    let first = (read("a.json"), read("a.csv"), read("samples.csv"));
    let o = bin()
        .current_dir(dir.path())
        .env("WARPCURV_THREADS", "1")
        .args(["verify", "--config", cfg])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(first, (read("a.json"), read("a.csv"), read("samples.csv")));

    let samples = String::from_utf8(first.2).unwrap();
    assert!(samples.starts_with("graph,x1,x2,f,H,R,normA,theta,W\r\n"));

    assert_eq!(run(dir.path(), &["verify", "--config", cfg, "--seed", "6", "--out", "b.json"]).status.code(), Some(0));
    let other: Value = serde_json::from_slice(&read("b.json")).unwrap();
    let same: Value = serde_json::from_slice(&first.0).unwrap();
    assert_eq!(other.as_array().unwrap().len(), same.as_array().unwrap().len());
}
