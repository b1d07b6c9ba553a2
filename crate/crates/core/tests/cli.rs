use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn geolab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geolab"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .env_remove("GEOLAB_SEED")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/geolab-output.schema.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks `required` and `additionalProperties: false` of an object schema against `value`.
fn check_object(schema: &Value, value: &Value, what: &str) {
    let obj = value.as_object().unwrap_or_else(|| panic!("{what} is not an object"));
    for key in schema["required"].as_array().unwrap() {
        assert!(obj.contains_key(key.as_str().unwrap()), "{what} lacks {key}");
    }
    if schema["additionalProperties"] == Value::Bool(false) {
        let props = schema["properties"].as_object().unwrap();
        for key in obj.keys() {
            assert!(props.contains_key(key), "{what} has field {key} missing from the schema");
        }
    }
}

fn check_envelope(path: &Path, result_def: &str) {
    let schema = schema();
    let value = read_json(path);
    check_object(&schema, &value, "envelope");
    assert_eq!(value["tool"], "geolab");
    assert!(!value["statement"].as_str().unwrap().is_empty());
    check_object(&schema["$defs"][result_def], &value["result"], result_def);
}

#[test]
fn geodesic_through_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(dir.path(), &["geodesic", "--from", "0,0", "--to", "0.5,0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("geodesic.json"));
    assert!((v["result"]["t_param"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!(v["result"]["left_inverse_residual"].as_f64().unwrap() < 1e-12);
    assert!(v["result"]["pin_residual"].as_f64().unwrap() < 1e-12);
    check_envelope(&dir.path().join("geodesic.json"), "GeodesicSummary");

    let out = geolab(dir.path(), &["geodesic", "--at", "0,0", "--dir", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn coincident_points_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(dir.path(), &["geodesic", "--from", "0.3,0", "--to", "0.3,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate geodesic"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["geodesic", "--from", "0.3,x", "--to", "0,0"],
        vec!["bloch", "--region", "hyperball 0,0"],
        vec!["bloch", "--region", "pentagon 3"],
        vec!["verify", "--only", "no-such-scenario"],
        vec!["frobnicate"],
    ] {
        assert_eq!(geolab(dir.path(), &args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bloch_radius_of_a_hyperbolic_disc() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(dir.path(), &["--format", "both", "bloch", "--region", "hyperball 0,0 0.5493"]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("bloch.json"));
    assert!((v["result"]["radius_estimate"].as_f64().unwrap() - 0.5493).abs() < 2e-3);
    assert!(fs::read_to_string(dir.path().join("bloch_trace.csv")).unwrap().starts_with("samples_used,radius\n"));
    check_envelope(&dir.path().join("bloch.json"), "BlochReport");
}

#[test]
fn custom_regions_are_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    for region in ["annulus-like custom", "custom annulus-like"] {
        let out = geolab(dir.path(), &["lipschitz", "--region", region]);
        assert_eq!(out.status.code(), Some(3), "{region}");
    }
    let out = geolab(dir.path(), &["lipschitz", "--region", "horosphere 1.5", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn lipschitz_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(dir.path(), &["lipschitz", "--region", "kball 0,0 1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("lipschitz.json"));
    assert!((v["result"]["mu_estimate"].as_f64().unwrap() - 1f64.tanh()).abs() < 1e-12);
    check_envelope(&dir.path().join("lipschitz.json"), "LipschitzReport");
}

#[test]
fn c_bloch_certificate_for_the_horosphere_difference() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(
        dir.path(),
        &["--format", "both", "certify", "--mode", "c-bloch", "--region", "horodiff 2 1", "--devices", "50", "--avoid", "1,0"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("certify.json"));
    assert!(v["result"]["max_radius"].is_number());
    assert!(v["result"]["certified_bound"].is_number());
    assert_eq!(v["config"]["devices"]["num_devices"], 50);
    check_envelope(&dir.path().join("certify.json"), "CertifierReport");
    assert!(dir.path().join("certify_devices.csv").exists());
}

#[test]
fn ifs_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(dir.path(), &["--format", "both", "ifs-run", "--preset", "product", "--iters", "60"]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("ifs_run.json"));
    assert_eq!(v["result"]["run"]["classification"]["kind"], "non_constant");
    assert!((v["result"]["product_constant"].as_f64().unwrap() - 0.2887880951).abs() < 1e-10);
    assert!(v["result"]["limit_error"].as_f64().unwrap() < 1e-6);
    check_envelope(&dir.path().join("ifs_run.json"), "ExampleRun");
    let csv = fs::read_to_string(dir.path().join("ifs_run_trace.csv")).unwrap();
    assert!(csv.starts_with("j,diameter\n"));
    assert_eq!(csv.lines().count(), 62);

    let alias = geolab(dir.path(), &["--quiet", "ifs-run", "--preset", "example14", "--iters", "5"]);
    assert_eq!(alias.status.code(), Some(0));

    let out = geolab(dir.path(), &["ifs-run", "--preset", "contraction-C0.5493", "--seeds", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("ifs_run.json"));
    assert_eq!(v["result"]["systems"], 50);
    assert_eq!(v["result"]["all_constant"], true);
    check_envelope(&dir.path().join("ifs_run.json"), "ContractionBatch");
}

#[test]
fn reduction_of_the_product_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(dir.path(), &["--format", "both", "reduce", "--preset", "product", "--from", "0.3,0", "--to", "0.6,0", "--steps", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("reduce.json"));
    assert!(v["result"]["tracking_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["result"]["steps_completed"], 50);
    check_envelope(&dir.path().join("reduce.json"), "ReducedSystem");
    assert_eq!(fs::read_to_string(dir.path().join("reduce_trace.csv")).unwrap().lines().count(), 51);
}

#[test]
fn environment_seed_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_geolab"))
        .args(["--seed", "5", "--output-dir"])
        .arg(dir.path())
        .args(["bloch", "--region", "euclid 0,0 0.5"])
        .env("GEOLAB_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&dir.path().join("bloch.json"));
    assert_eq!(v["seed"], 77);
    assert_eq!(v["config"]["estimator"]["seed"], 77);
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn verify_is_bitwise_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = geolab(a.path(), &["--format", "both", "verify"]);
    let second = geolab(b.path(), &["--format", "both", "verify"]);
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert_eq!(first.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(stdout.lines().filter(|l| l.contains(" PASS")).count(), 6, "{stdout}");

    let (ca, cb) = (dir_contents(a.path()), dir_contents(b.path()));
    assert_eq!(ca.len(), 8, "{:?}", ca.keys().collect::<Vec<_>>());
    assert_eq!(ca.keys().collect::<Vec<_>>(), cb.keys().collect::<Vec<_>>());
    for (name, bytes) in &ca {
        assert!(bytes == &cb[name], "{name} differs between runs");
    }
    for id in ["sandwich", "contraction", "main_theorem", "product_counterexample", "horosphere", "implications"] {
        check_envelope(&a.path().join(format!("scenario_{id}.json")), "ScenarioResult");
    }
}

#[test]
fn corrupted_tolerance_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let tol = dir.path().join("tolerances.json");
    fs::write(&tol, r#"{"sandwich": -0.5}"#).unwrap();
    let out = geolab(dir.path(), &["verify", "--only", "sandwich", "--tolerances", tol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("sandwich") && l.contains("FAIL")), "{stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("sandwich"));
}

#[test]
fn only_runs_the_selected_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = geolab(dir.path(), &["verify", "--only", "product_counterexample"]);
    assert_eq!(out.status.code(), Some(0));
    let files: Vec<String> = dir_contents(dir.path()).into_keys().collect();
    assert_eq!(files, vec!["scenario_product_counterexample.json".to_string()]);
}
