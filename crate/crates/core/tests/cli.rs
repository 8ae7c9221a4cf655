use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn eqo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqo"))
        .args(args)
        .env_remove("EQO_DEFAULT_TOL")
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn zero_squeeze_is_identity() {
    let o = eqo(&["decompose", "--catalog", "squeeze_1d", "--param", "z1=0", "--param", "z2=0", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    for key in ["W", "Y", "Z"] {
        assert_eq!(v[key], serde_json::json!([[[0.0, 0.0]]]), "{key}");
    }
    assert_eq!(v["prefactor"], serde_json::json!([1.0, 0.0]));
}

#[test]
fn two_mode_squeeze_verifies() {
    let o = eqo(&["verify", "--catalog", "two_mode_squeeze", "--param", "re_g=0.8", "--param", "im_g=0", "--checks", "all"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert_eq!(stdout.matches(" pass").count(), 5, "{stdout}");
}

#[test]
fn corrupted_transfer_fails_symplectic() {
    let input = fixture("corrupted_transfer.json");
    let o = eqo(&["verify", "--input", &input, "--format", "json"]);
    assert_eq!(code(&o), 3);
    let v = json(&o);
    let checks = v["checks"].as_array().unwrap();
    let verdict = |name: &str| {
        checks
            .iter()
            .find(|c| c["check"] == name)
            .map(|c| c["verdict"].as_str().unwrap().to_string())
            .unwrap()
    };
    assert_eq!(verdict("symplectic"), "fail");
    assert_eq!(verdict("oracle"), "skipped");
    assert_eq!(verdict("appendix"), "skipped");
}

#[test]
fn near_quarter_period_is_a_domain_error() {
    let o = eqo(&[
        "verify",
        "--catalog",
        "harmonic_time_displacement",
        "--param",
        "t=1.5707963",
        "--checks",
        "reconstruct",
    ]);
    assert_eq!(code(&o), 2);
    let o = eqo(&["decompose", "--catalog", "harmonic_time_displacement", "--param", "t=1.5707963", "--format", "json"]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_eq!(v["kind"], "domain");
    assert!(v["det_t22"].as_f64().unwrap() < 1e-6);
}

#[test]
fn raw_generator_round_trips_through_reconstruct() {
    let input = fixture("raw_two_mode.json");
    let o = eqo(&["verify", "--input", &input, "--appendix", "--steps", "2000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let o = eqo(&["decompose", "--input", &input, "--format", "json"]);
    assert_eq!(code(&o), 0);
    let emitted = json(&o);
    let reported = emitted["residuals"]["reconstruct"].as_f64().unwrap();

    let dir = std::env::temp_dir().join(format!("eqo-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("factorization.json");
    std::fs::write(&path, serde_json::to_string(&emitted).unwrap()).unwrap();
    let o = eqo(&["reconstruct", "--input", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let back = json(&o);
    let residual = back["residual"].as_f64().unwrap();
    assert!(residual <= reported.max(1e-15) * 1.0001, "{residual:e} vs {reported:e}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_input_names_the_field() {
    let o = eqo(&["decompose", "--input", &fixture("ragged_d2.json")]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("'D2'"));
    let o = eqo(&["decompose", "--input", "/nonexistent/eqo.json"]);
    assert_eq!(code(&o), 1);
    let o = eqo(&["verify", "--catalog", "squeeze_1d", "--checks", "nonsense"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn env_tolerance_is_honoured() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_eqo"));
        cmd.args(["verify", "--catalog", "coupled_oscillator", "--param", "t=0.4", "--param", "lambda=0.6", "--checks", "symplectic", "--format", "json"]);
        match env {
            Some(v) => cmd.env("EQO_DEFAULT_TOL", v),
            None => cmd.env_remove("EQO_DEFAULT_TOL"),
        };
        cmd.output().unwrap()
    };
    let tol = |o: &Output| json(o)["checks"][0]["tolerance"].as_f64().unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b;
    assert!(close(tol(&run(None)), 1e-10));
    assert!(close(tol(&run(Some("1e-30"))), 1e-30));
    assert_eq!(code(&run(Some("1e-30"))), 3);
}

#[test]
fn catalog_list_json() {
    let o = eqo(&["catalog", "list", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = json(&o)
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names, ["harmonic_time_displacement", "squeeze_1d", "two_mode_squeeze", "coupled_oscillator"]);
}
