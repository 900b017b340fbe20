use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const EULER: &str = r#"{"p":2,"q":0,"r":0,"a":[1.0,0.0],"phi":{"variant":"Polynomial","params":{"coeffs":[[1.0,0.0]]}}}"#;

/// Config for the Euler problem with extra top-level fields.
fn euler_with(extra: &str) -> String {
    format!("{{\"problem\":{EULER}{extra}}}")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes-summa"))
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("STOKES_SUMMA_THREADS", n),
        None => cmd.env_remove("STOKES_SUMMA_THREADS"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn classify_euler() {
    let v = json_of(&run(&["classify"], None));
    assert_eq!(v["result"]["regime"], "Summable1c");
    assert_eq!(v["result"]["k"], 1.0);
    assert_eq!(v["result"]["stokes"], serde_json::json!([0.0]));
    assert_eq!(v["tool"], "stokes-summa");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["command"], "classify");
}

#[test]
fn jump_euler_routes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let body = euler_with(r#","t_grid":{"modulus_min":0.1,"modulus_max":0.2,"count":2}"#);
    let cfg = write_config(dir.path(), "jump.json", &body);
    let v = json_of(&run(&["jump", "--config", &cfg], None));
    let r = &v["result"];
    assert_eq!(r["samples"].as_array().unwrap().len(), 2);
    assert!(r["max_rel_disagreement"].as_f64().unwrap() <= 1e-4);
    let t = r["samples"][0]["t"][0].as_f64().unwrap();
    let closed = r["samples"][0]["closed"][1].as_f64().unwrap();
    let oracle = 2.0 * std::f64::consts::PI * (-1.0 / t).exp() / t;
    assert!((closed - oracle).abs() <= 1e-10 * oracle);
}

#[test]
fn sum_on_a_stokes_line_fails_with_validation() {
    let dir = tempfile::tempdir().unwrap();
    let body = euler_with(r#","direction":0.0"#);
    let cfg = write_config(dir.path(), "sum.json", &body);
    let out = run(&["sum", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Stokes line"), "{err}");
}

#[test]
fn unknown_config_fields_fail_with_validation() {
    let dir = tempfile::tempdir().unwrap();
    let body = euler_with(r#","colour":1"#);
    let cfg = write_config(dir.path(), "bad.json", &body);
    let out = run(&["classify", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn accuracy_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = euler_with(r#","quadrature":{"abs_tol":1e-300,"rel_tol":1e-16,"max_subdivisions":3}"#);
    let cfg = write_config(dir.path(), "tight.json", &body);
    let out = run(&["sum", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"problem":{"p":0,"q":0,"r":2,"a":[1.0,0.0],"phi":{"variant":"Rational","params":{"z0":[1.0,0.0],"m":1}}},
        "t_grid":{"modulus_min":0.1,"modulus_max":0.2,"count":3}}"#;
    let cfg = write_config(dir.path(), "case2.json", body);
    let a = run(&["jump", "--config", &cfg], Some("1"));
    let b = run(&["jump", "--config", &cfg], Some("3"));
    let c = run(&["jump", "--config", &cfg], Some("3"));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["result"]["max_rel_disagreement"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sum.csv");
    let out = run(&["sum", "--format", "csv", "--out", out_path.to_str().unwrap(), "--tol", "1e-10"], None);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# tool: stokes-summa"));
    assert!(lines[2].starts_with("# config: {"));
    assert!(lines[2].contains("\"rel_tol\":1e-10"));
    assert_eq!(lines[3], "t_re,t_im,u_re,u_im,error");
    assert_eq!(lines.len(), 7);
}

#[test]
fn verify_passes_for_euler() {
    let v = json_of(&run(&["verify"], None));
    assert_eq!(v["result"]["passed"], true);
    assert!(v["result"]["checks"].as_array().unwrap().len() >= 8);
}

#[test]
fn stokes_table_lists_anti_stokes_lines() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"problem":{"p":2,"q":2,"r":0,"a":[1.0,0.0],"phi":{"variant":"Polynomial","params":{"coeffs":[[1.0,0.0]]}}}}"#;
    let cfg = write_config(dir.path(), "q2.json", body);
    let v = json_of(&run(&["stokes", "--config", &cfg], None));
    let lines = v["result"]["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 3);
    for l in lines {
        let d = l["direction"].as_f64().unwrap();
        let [lo, hi] = [l["anti_stokes"][0].as_f64().unwrap(), l["anti_stokes"][1].as_f64().unwrap()];
        // k = 3, so the anti-Stokes lines sit π/6 away
        assert!((d - lo - std::f64::consts::PI / 6.0).abs() < 1e-11);
        assert!((hi - d - std::f64::consts::PI / 6.0).abs() < 1e-11);
    }
}
