use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qhd_cli::read_trajectory_csv;
use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn qhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhd")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qhd(&args)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_constant_q_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("validate", &scenario("constant_q.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("fundamental_tensor_vs_hessian"));
    let reports = std::fs::read_to_string(dir.path().join("reports.jsonl")).unwrap();
    for line in reports.lines() {
        let r: Value = serde_json::from_str(line).unwrap();
        assert_eq!(r["passed"], Value::Bool(true), "{line}");
    }
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "validate");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn validate_every_sample_scenario() {
    for name in ["ground_state.json", "oscillator.json", "coherent_state.json", "magnetic.json", "anisotropic.json"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run("validate", &scenario(name), dir.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
    }
}

#[test]
fn compare_kropina_newton_on_harmonic_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("compare", &scenario("oscillator.json"), dir.path(), &["--a", "kropina", "--b", "newton"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let r = json(&dir.path().join("compare.json"));
    assert!(r["max_deviation"].as_f64().unwrap() < 1e-4);
    assert!(r["window"][1].as_f64().unwrap() >= 5.0);
}

#[test]
fn compare_riemann_newton_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("compare", &scenario("coherent_state.json"), dir.path(), &["--a", "riemann", "--b", "newton"]);
    assert_eq!(o.status.code(), Some(1));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["checks"][0]["passed"], Value::Bool(false));
}

#[test]
fn zero_initial_beta_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    std::fs::write(&s, r#"{"V": "-(1)", "psi": {"R": "1", "S": "0"}, "initial": {"y": [0, 1, 0, 0]}}"#).unwrap();
    let o = run("geodesic", &s, &dir.path().join("out"), &["--flavor", "kropina"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("InvalidInitial"), "{}", stderr(&o));
}

#[test]
fn geodesic_output_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run("geodesic", &scenario("magnetic.json"), out, &["--flavor", "kropina", "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["trajectory.csv", "trajectory.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("param,x0,x1,x2,x3,y0,y1,y2,y3\n"));
    let samples = read_trajectory_csv(&csv).unwrap();
    let side = json(&a.join("trajectory.json"));
    assert_eq!(side["samples"].as_u64().unwrap() as usize, samples.len());
    assert!(side["conserved_drift"].as_f64().unwrap() < 1e-8);
    assert_eq!(samples[0].x, [0.0, 0.3, 0.0, 0.1]);
}

#[test]
fn validate_is_deterministic_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run("validate", &scenario("magnetic.json"), out, &["--seed", "11"]);
    }
    assert_eq!(std::fs::read(a.join("reports.jsonl")).unwrap(), std::fs::read(b.join("reports.jsonl")).unwrap());
}

#[test]
fn newton_geodesic_reports_no_drift() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("geodesic", &scenario("oscillator.json"), dir.path(), &["--flavor", "newton"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let side = json(&dir.path().join("trajectory.json"));
    assert_eq!(side["conserved_drift"], Value::Null);
    let samples = read_trajectory_csv(&std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap()).unwrap();
    let last = samples.last().unwrap();
    assert!((last.x[1] - last.x[0].cos()).abs() < 1e-9);
}

#[test]
fn metric_reports_indefinite_points() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    // V + V_Q = 1/2 > 0 makes a₀₀ negative
    std::fs::write(&s, r#"{"V": "0.5*x^2", "psi": {"R": "exp(-0.5*x^2)", "S": "0"}}"#).unwrap();
    let points = dir.path().join("p.csv");
    std::fs::write(&points, "t,x,y,z\n0,0.5,0,0\n").unwrap();
    let o = run("metric", &s, &dir.path().join("out"), &["--points", points.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let dump = json(&dir.path().join("out/metric.json"));
    let err = dump[0]["error"].as_str().unwrap();
    assert!(err.starts_with("MetricNotPositiveDefinite at [0.0, 0.5, 0.0, 0.0]"), "{err}");
}

#[test]
fn metric_dumps_both_determinant_forms() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("p.csv");
    std::fs::write(&points, "0,0,0,0\n").unwrap();
    let s = dir.path().join("s.json");
    std::fs::write(&s, r#"{"constants": {"mass": 2}, "V_Q": -1}"#).unwrap();
    let o = run("metric", &s, &dir.path().join("out"), &["--points", points.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = &json(&dir.path().join("out/metric.json"))[0];
    // a = I at y = (1,0,0,0): g = diag(1,2,2,2)
    assert_eq!(d["det_g"].as_f64().unwrap(), 8.0);
    assert_eq!(d["kropina_determinant"].as_f64().unwrap(), 8.0);
    assert_eq!(d["stated_determinant"].as_f64().unwrap(), 24.0);
    assert_eq!(d["stated_determinant_gap"].as_f64().unwrap(), 2.0);
}

#[test]
fn zermelo_on_neutral_scenario_reports_killing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("zermelo", &scenario("constant_q.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("wind is Killing"));
    let z = json(&dir.path().join("zermelo.json"));
    assert_eq!(z["killing"]["is_killing"], Value::Bool(true));
    assert_eq!(z["points"][0]["conformal_factor"].as_f64().unwrap(), 4.0);
}

#[test]
fn syntax_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    std::fs::write(&s, "{\n  \"V\": \"x\"\n  \"V_Q\": 0\n}").unwrap();
    let o = run("validate", &s, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SyntaxError at line 3"), "{}", stderr(&o));
}

#[test]
fn schema_and_expression_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    std::fs::write(&s, r#"{"V": "x"}"#).unwrap();
    let o = run("validate", &s, &dir.path().join("out"), &[]);
    assert!(stderr(&o).contains("SchemaError at `psi`"), "{}", stderr(&o));
    std::fs::write(&s, r#"{"V": "x^", "V_Q": 0}"#).unwrap();
    let o = run("validate", &s, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ExpressionError in `V`"), "{}", stderr(&o));
}

#[test]
fn grid_backed_scenario() {
    let dir = tempfile::tempdir().unwrap();
    // potential V = x²/2 − 1 and ground-state Ψ sampled along x
    let n = 161;
    let h = 8.0 / (n - 1) as f64;
    let header = format!("origin,0,-4,0,0\nspacing,1,{h},1,1\ncount,1,{n},1,1\n");
    let mut v = header.clone();
    let mut psi = header;
    for i in 0..n {
        let x = -4.0 + h * i as f64;
        v += &format!("{}\n", 0.5 * x * x - 1.0);
        let r = (-0.5 * x * x).exp();
        psi += &format!("{},{}\n", r * 0.3f64.cos(), r * 0.3f64.sin());
    }
    std::fs::write(dir.path().join("v.csv"), v).unwrap();
    std::fs::write(dir.path().join("psi.csv"), psi).unwrap();
    let s = dir.path().join("s.json");
    std::fs::write(
        &s,
        r#"{"V": {"grid": "v.csv"}, "psi": {"grid": "psi.csv"},
            "initial": {"x": [0, 0.7, 0, 0]}, "numerics": {"steps": 2000}}"#,
    )
    .unwrap();
    let o = run("geodesic", &s, &dir.path().join("out"), &["--flavor", "newton"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let samples = read_trajectory_csv(&std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap()).unwrap();
    // the ground state is stationary: the particle stays at rest
    let last = samples.last().unwrap();
    assert!((last.x[1] - 0.7).abs() < 1e-4, "{:?}", last.x);
    let o = run("zermelo", &s, &dir.path().join("z"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}
