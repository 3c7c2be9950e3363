use std::path::Path;
use std::process::Command;

use mixmeas::cli::{CSV_HEADER, DEFAULT_CONFIG};

fn mixmeas(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mixmeas")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn fixture(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const MEASURE: &str = "[measure]\nphi = { kind = \"power\", c = 0.5, p = 2.0 }\ngauge = \"L\"\n";

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.toml", "[bodies.L\nkind = \"disk\"".to_string(), "syntax"),
        (
            "clockwise.toml",
            format!("[bodies.L]\nkind = \"polygon\"\nvertices = [[-1.0,-1.0],[-1.0,1.0],[1.0,1.0],[1.0,-1.0]]\n{MEASURE}"),
            "bodies.L",
        ),
        (
            "unknown_gauge.toml",
            "[bodies.D]\nkind = \"disk\"\nradius = 1.0\n[measure]\nphi = { kind = \"linear\", c = 1.0 }\ngauge = \"L\"\n".into(),
            "measure.gauge",
        ),
        (
            "bad_phi.toml",
            "[bodies.L]\nkind = \"disk\"\nradius = 1.0\n[measure]\nphi = { kind = \"linear\", c = -1.0 }\ngauge = \"L\"\n".into(),
            "measure.phi",
        ),
        (
            "unknown_role.toml",
            format!("[bodies.L]\nkind = \"disk\"\nradius = 1.0\n{MEASURE}[roles]\nK = \"Q\"\n"),
            "roles.K",
        ),
        (
            "bad_param.toml",
            format!("[bodies.L]\nkind = \"disk\"\nradius = 1.0\n{MEASURE}[params]\nt = -2.0\n"),
            "params.t",
        ),
        (
            "not_convex.toml",
            format!("[bodies.L]\nkind = \"fourier\"\na0 = 1.0\ncos = [0.0, 0.5]\n{MEASURE}"),
            "bodies.L",
        ),
    ];
    for (name, text, needle) in cases {
        let path = fixture(dir.path(), name, &text);
        let (code, _, err) = mixmeas(&["normalize", "--config", &path]);
        assert_eq!(code, 2, "{name}: {err}");
        assert!(err.contains(needle), "{name}: {err}");
    }
    let (code, _, _) = mixmeas(&["normalize", "--config", "/nonexistent/config.toml"]);
    assert_eq!(code, 2);
    let (code, _, _) = mixmeas(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn missing_roles_and_smoothness_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture(dir.path(), "bare.toml", &format!("[bodies.L]\nkind = \"disk\"\nradius = 1.0\n{MEASURE}"));
    let (code, _, err) = mixmeas(&["first", "--config", &path, "--t", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("roles.K"), "{err}");
    let square = format!(
        "[bodies.L]\nkind = \"disk\"\nradius = 1.0\n[bodies.S]\nkind = \"polygon\"\nvertices = [[-1.0,-1.0],[1.0,-1.0],[1.0,1.0],[-1.0,1.0]]\n{MEASURE}[roles]\nA = \"S\"\nB = \"L\"\nC = \"L\"\n"
    );
    let path = fixture(dir.path(), "square.toml", &square);
    let (code, _, _) = mixmeas(&["second", "--config", &path, "--t", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn numerical_failures_exit_3() {
    // the second-order measure is positive below t = 1
    let (code, _, err) = mixmeas(&["sweep", "--kind", "second", "--t-min", "0.5", "--t-max", "3", "--points", "4"]);
    assert_eq!(code, 3, "{err}");
    let dir = tempfile::tempdir().unwrap();
    let normalized = format!("[bodies.L]\nkind = \"disk\"\nradius = 1.0\n{MEASURE}normalized = true\n[roles]\nK = \"L\"\n");
    let path = fixture(dir.path(), "tail.toml", &normalized);
    let (code, _, err) = mixmeas(&["tail", "--config", &path, "--t-min", "10", "--t-max", "60", "--points", "3"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("largest usable t"), "{err}");
}

#[test]
fn contradictions_and_failed_verification_exit_4() {
    let (code, _, err) = mixmeas(&["verify", "--tolerance", "1e-14"]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("FAIL"));
}

#[test]
fn verify_default_config() {
    let (code, out, err) = mixmeas(&["verify"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn second_prints_log_domain_pair() {
    let (code, out, _) = mixmeas(&["second", "--t", "2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("sign = -1\nlog_abs = "));
    assert!(out.contains("nodes_used = "));
}

#[test]
fn sweep_and_tail_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let out_s = out.to_string_lossy();
    let (code, _, _) = mixmeas(&["sweep", "--kind", "first", "--t-min", "2.5", "--t-max", "14", "--points", "16", "--out", &out_s]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(rows.len(), 16);
    for r in &rows {
        assert_eq!(r.len(), 6);
        // 17 significant digits
        assert_eq!(r[0].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| (w[1] + 1.0).abs() < (w[0] + 1.0).abs()));

    let cfg = DEFAULT_CONFIG.replace("c0 = 1.0", "normalized = true");
    let path = fixture(dir.path(), "norm.toml", &cfg);
    let (code, out, _) = mixmeas(&["tail", "--config", &path, "--t-min", "2", "--t-max", "14", "--points", "5"]);
    assert_eq!(code, 0);
    for row in out.lines().skip(1) {
        let ratio: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((ratio + 1.0).abs() < 1e-6, "{row}");
    }
}

#[test]
fn compare_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DEFAULT_CONFIG.replace("K = \"disk\"", "K = \"square\"");
    let path = fixture(dir.path(), "cmp.toml", &cfg);
    let out = dir.path().join("report.json");
    let out_s = out.to_string_lossy();
    let args = ["compare", "--config", &path, "--R", "3", "--t-min", "5", "--t-max", "15", "--out", &out_s];
    let (code, _, err) = mixmeas(&args);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["R"], 3.0);
    assert_eq!(report["holds_on_grid"], false);
    assert_eq!(report["verdict"]["verdict"], "violated");
    assert!(report["first_violation_t"].as_f64().unwrap() <= 6.0);
}

#[test]
fn inradius_and_normalize() {
    let cfg = DEFAULT_CONFIG.replace("K = \"disk\"", "K = \"ellipse\"");
    let dir = tempfile::tempdir().unwrap();
    let path = fixture(dir.path(), "e.toml", &cfg);
    let (code, out, _) = mixmeas(&["inradius", "--config", &path]);
    assert_eq!(code, 0);
    let r: f64 = out.lines().next().unwrap().trim_start_matches("r = ").parse().unwrap();
    assert!((r - 1.0).abs() < 1e-9);
    let (code, out, _) = mixmeas(&["normalize"]);
    assert_eq!(code, 0);
    let z: f64 = out.lines().next().unwrap().trim_start_matches("Z = ").parse().unwrap();
    assert!((z / std::f64::consts::TAU - 1.0).abs() < 1e-10);
}
