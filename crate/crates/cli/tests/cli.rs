use std::fs;
use std::path::Path;
use std::process::Command;

fn lab(args: &[&str]) -> i32 {
    let st = Command::new(env!("CARGO_BIN_EXE_grushin-lab")).args(args).output().expect("binary runs");
    st.status.code().expect("exit code")
}

fn run_with(dir: &Path, cmd: &str, config: &str) -> i32 {
    let cfg = dir.join(format!("{cmd}.config.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    lab(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"])
}

#[test]
fn alpha_zero_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_with(d.path(), "identities", r#"{"space": {"m": 3, "n": 1, "alpha": 0.0}}"#), 2);
}

#[test]
fn malformed_json_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_with(d.path(), "identities", r#"{"space": {"m": 3,"#), 2);
}

#[test]
fn unknown_key_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_with(d.path(), "identities", r#"{"spaces": {}}"#), 2);
}

#[test]
fn missing_config_is_input_error() {
    assert_eq!(lab(&["identities", "--config", "/nonexistent/config.json"]), 2);
}

#[test]
fn hardy_with_m_two_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"space": {"m": 2, "n": 1, "alpha": 1.0}, "fields": ["gauss"], "hardy": {"radii": [1.0], "inequalities": ["hardy_x"]}}"#;
    assert_eq!(run_with(d.path(), "hardy", cfg), 2);
}

#[test]
fn unknown_field_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_with(d.path(), "frequency", r#"{"frequency": {"field": "nonesuch"}}"#), 2);
}

#[test]
fn zero_qmc_points_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"quadrature": {"method": "qmc", "settings": {"qmc_points": 0}}}"#;
    assert_eq!(run_with(d.path(), "hardy", cfg), 2);
}

#[test]
fn unreachable_residual_target_fails() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"solver": {"problem": "data", "nodes": [33], "data_field": "gauss", "residual_target": 1e-30}}"#;
    assert_eq!(run_with(d.path(), "solve", cfg), 1);
}

#[test]
fn constant_data_with_zero_potential_passes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"solver": {"problem": "data", "nodes": [33], "data_field": "one", "potential": {"kind": "zero"}}}"#;
    assert_eq!(run_with(d.path(), "solve", cfg), 0);
    let u = fs::read_to_string(d.path().join("out/u.csv")).unwrap();
    assert!(u.lines().count() > 33);
}

#[test]
fn hardy_single_field_single_radius() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"space": {"m": 5, "n": 1, "alpha": 1.0}, "fields": ["gauss"], "hardy": {"radii": [1.0], "inequalities": ["hardy_x"]}}"#;
    assert_eq!(run_with(d.path(), "hardy", cfg), 0);
    let text = fs::read_to_string(d.path().join("out/hardy.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 9);
    assert!(lines[0].starts_with("field,r,hardy_x_lhs"));
    assert!(lines[1].starts_with("gauss,"));
    assert!(lines[1].ends_with(",PASS"));
}

#[test]
fn config_is_echoed_verbatim() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "{\"identities\": {\"points\": 12},\n  \"space\": {\"m\": 3, \"n\": 2, \"alpha\": 0.5}}\n";
    assert_eq!(run_with(d.path(), "identities", cfg), 0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/identities.json")).unwrap()).unwrap();
    assert_eq!(doc["config"].as_str(), Some(cfg));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["summary"]["points"], 12);
}

#[test]
fn report_on_empty_directory_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["report", "--dir", d.path().to_str().unwrap()]), 2);
    assert_eq!(lab(&["report", "--dir", d.path().join("missing").to_str().unwrap()]), 2);
}

#[test]
fn report_is_idempotent_and_lists_inequalities() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"fields": ["gauss", "poly_mix"], "hardy": {"radii": [0.5, 1.0]}, "identities": {"points": 50}}"#;
    assert_eq!(run_with(d.path(), "identities", cfg), 0);
    assert_eq!(run_with(d.path(), "hardy", cfg), 0);
    let out = d.path().join("out");
    assert_eq!(lab(&["report", "--dir", out.to_str().unwrap()]), 0);
    let first = fs::read(out.join("summary.json")).unwrap();
    assert_eq!(lab(&["report", "--dir", out.to_str().unwrap()]), 0);
    assert_eq!(first, fs::read(out.join("summary.json")).unwrap());
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    for id in grushin_lab::commands::all_ids() {
        assert_eq!(doc["inequalities"][id]["pass"].as_u64().unwrap() + doc["inequalities"][id]["reported"].as_u64().unwrap(), 4);
    }
    assert!(doc["inequalities"]["grad_hardy"]["max_empirical_constant"].as_f64().is_some());
}

#[test]
fn report_propagates_failure() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("solve.json"), r#"{"schema_version": 1, "command": "solve", "pass": false, "summary": {}}"#).unwrap();
    assert_eq!(lab(&["report", "--dir", out.to_str().unwrap()]), 1);
}

#[test]
fn zero_threads_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, "{}").unwrap();
    assert_eq!(lab(&["identities", "--config", cfg.to_str().unwrap(), "--threads", "0"]), 2);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        grushin_lab::LoadedConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 3);
}
