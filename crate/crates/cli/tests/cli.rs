use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const MODEL_A: &str = r#"{"model": {"L": 0, "M": 4, "r_inner": 1, "r_outer": 1.5}}"#;

fn serrin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serrin"))
        .current_dir(dir)
        .env_remove("SERRIN_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &TempDir, name: &str, body: &str) -> String {
    fs::write(dir.path().join(name), body).unwrap();
    name.to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .trim()
        .parse()
        .unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn fit_recovers_model_a() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "a.json",
        r#"{"boundary_data": {"a": -0.5, "b": 0.49686043243265754, "alpha": -3, "beta": 1.1666666666666667}}"#,
    );
    let out = serrin(dir.path(), &["fit", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("increasing"));
    for (key, want) in [("L", 0.0), ("M", 4.0), ("r_inner", 1.0), ("r_outer", 1.5)] {
        assert!((value(&text, key) - want).abs() < 1e-9, "{key}: {text}");
    }
}

#[test]
fn fit_covered_decreasing_data() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "b.json", r#"{"boundary_data": {"a": 1.5, "b": 0, "alpha": 1, "beta": -2}}"#);
    let out = serrin(dir.path(), &["fit", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("decreasing_covered"));
    assert_eq!(value(&text, "L"), 2.0);
    assert_eq!(value(&text, "M"), 0.0);
    assert_eq!(value(&text, "r_inner"), 1.0);
    assert_eq!(value(&text, "r_outer"), 2.0);
}

#[test]
fn fit_json_output() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.json", MODEL_A);
    let out = serrin(dir.path(), &["fit", &cfg, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["case"], "increasing");
    assert!((doc["model"]["log_coeff"].as_f64().unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn uncovered_regime_exits_3_with_condition() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "u.json", r#"{"boundary_data": {"a": 2, "b": 0, "alpha": 1, "beta": -1}}"#);
    let out = serrin(dir.path(), &["fit", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("2a+alpha^2"), "{}", stderr(&out));
}

#[test]
fn inadmissible_data_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "x.json", r#"{"boundary_data": {"a": 0, "b": 1, "alpha": 1, "beta": 1}}"#);
    assert_eq!(serrin(dir.path(), &["fit", &cfg]).status.code(), Some(2));
}

#[test]
fn bad_config_and_environment_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "bad.json", r#"{"modle": {}}"#);
    assert_eq!(serrin(dir.path(), &["fit", &cfg]).status.code(), Some(2));
    assert_eq!(serrin(dir.path(), &["fit", "missing.json"]).status.code(), Some(2));
    let cfg = config(&dir, "a.json", MODEL_A);
    let out = Command::new(env!("CARGO_BIN_EXE_serrin"))
        .current_dir(dir.path())
        .env("SERRIN_THREADS", "zero")
        .args(["fit", &cfg])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_writes_full_field_file() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.json", MODEL_A);
    let out = serrin(dir.path(), &["solve", &cfg, "-o", "out/u.txt"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("out/u.txt")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 129 * 129);
    assert!(text.contains("# spec_sha256 "));
}

#[test]
fn solved_field_matches_model() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "c.json",
        r#"{"model": {"L": 0, "M": 4, "r_inner": 1, "r_outer": 1.5}, "resolution": {"ns": 17, "ntheta": 16}}"#,
    );
    let out = serrin(dir.path(), &["solve", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("field.txt")).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: Vec<f64> = line.split_whitespace().map(|x| x.parse().unwrap()).collect();
        let r = v[2].hypot(v[3]);
        let exact = -r * r / 2.0 + 4.0 * r.ln();
        assert!((v[4] - exact).abs() < 5e-3, "{line}");
    }
}

#[test]
fn inverted_radii_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "inv.json",
        r#"{"boundary_data": {"a": -0.5, "b": 0.5, "alpha": -3, "beta": 1},
            "domain": {"inner": {"c0": 2}, "outer": {"c0": 1}}}"#,
    );
    let out = serrin(dir.path(), &["solve", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn verify_model_a_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.json", MODEL_A);
    let out = serrin(dir.path(), &["verify", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}{}", stdout(&out), stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["case"], "increasing");
    let (header, rows) = csv_rows(&dir.path().join("report.csv"));
    assert_eq!(header.len(), 14);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4].parse::<f64>().unwrap() <= 1e-2);
}

#[test]
fn perturbed_verify_fails_unless_asymmetry_is_expected() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.json", MODEL_A);
    let args = ["verify", cfg.as_str(), "--eps", "0.1", "--ns", "65", "--ntheta", "65"];
    let out = serrin(dir.path(), &args);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
    let mut expect = args.to_vec();
    expect.push("--expect-asymmetric");
    assert_eq!(serrin(dir.path(), &expect).status.code(), Some(0));
    // an unperturbed domain does not meet the expectation
    let flat = ["verify", cfg.as_str(), "--ns", "65", "--ntheta", "65", "--expect-asymmetric"];
    assert_eq!(serrin(dir.path(), &flat).status.code(), Some(1));
}

#[test]
fn uncovered_verify_with_explicit_domain_is_limited() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "u.json",
        r#"{"boundary_data": {"a": 2, "b": 0, "alpha": 1, "beta": -1},
            "domain": {"inner": {"c0": 1}, "outer": {"c0": 2}},
            "resolution": {"ns": 33, "ntheta": 33}}"#,
    );
    let out = serrin(dir.path(), &["verify", &cfg]);
    let text = stdout(&out);
    assert!(text.contains("unproven regime"), "{text}{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["neumann_sd_inner", "neumann_sd_outer", "pohozaev_res"]);
}

const SWEEP: &str = r#"{"model": {"L": 0, "M": 4, "r_inner": 1, "r_outer": 1.5},
    "resolution": {"ns": 33, "ntheta": 33},
    "sweep": {"parameter": "eps", "values": [0, 0.025, 0.05, 0.1]},
    "output": {"reports_dir": "reports"}}"#;

#[test]
fn eps_sweep_is_monotone_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "s.json", SWEEP);
    let out = serrin(dir.path(), &["sweep", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let path = dir.path().join("sweep.csv");
    let first = fs::read(&path).unwrap();
    let (header, rows) = csv_rows(&path);
    assert_eq!(header.len(), 15);
    assert_eq!(header.last().unwrap(), "status");
    let sd: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(sd.windows(2).all(|w| w[1] > w[0]), "{sd:?}");
    let eps: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    assert_eq!(eps, ["0", "0.025", "0.05", "0.1"]);
    assert!(dir.path().join("reports/scenario_003.json").exists());

    let again = Command::new(env!("CARGO_BIN_EXE_serrin"))
        .current_dir(dir.path())
        .env("SERRIN_THREADS", "1")
        .args(["sweep", &cfg])
        .output()
        .unwrap();
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn empty_sweep_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "e.json",
        r#"{"model": {"L": 0, "M": 4, "r_inner": 1, "r_outer": 1.5},
            "sweep": {"parameter": "eps", "values": []}}"#,
    );
    assert_eq!(serrin(dir.path(), &["sweep", &cfg]).status.code(), Some(2));
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn resolution_sweep_records_failures_per_row() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "r.json",
        r#"{"model": {"L": 0, "M": 4, "r_inner": 1, "r_outer": 1.5},
            "sweep": {"parameter": "n", "values": [2, 17, 33]},
            "output": {"csv": "res.csv"}}"#,
    );
    let out = serrin(dir.path(), &["sweep", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (_, rows) = csv_rows(&dir.path().join("res.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], "2");
    assert!(rows[0][14].starts_with("error: "), "{:?}", rows[0]);
    assert_eq!(rows[0][0], "increasing");
    assert_eq!(rows[1][1], "17");
    assert_eq!(rows[2][2], "33");
    assert!(!rows[2][14].starts_with("error"));
}

#[test]
fn resolution_sweep_residuals_decrease() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "r.json",
        r#"{"model": {"L": 0, "M": 4, "r_inner": 1, "r_outer": 1.5},
            "sweep": {"parameter": "n", "values": [33, 65, 129]}}"#,
    );
    let out = serrin(dir.path(), &["sweep", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = csv_rows(&dir.path().join("sweep.csv"));
    for col in ["pohozaev_res", "grad_margin", "div_identity_res"] {
        let k = header.iter().position(|h| h == col).unwrap();
        let v: Vec<f64> = rows.iter().map(|r| r[k].parse::<f64>().unwrap().abs()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{col}: {v:?}");
        // halving h should at least halve a first-order residual
        assert!(v[0] / v[2] >= 4.0, "{col}: {v:?}");
    }
}

#[test]
fn mms_reports_second_order() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "m.json",
        r#"{"model": {"L": 0, "M": 4, "r_inner": 1, "r_outer": 1.5}, "mms": {"sizes": [17, 33, 65]}}"#,
    );
    let out = serrin(dir.path(), &["mms", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = csv_rows(&dir.path().join("mms.csv"));
    assert_eq!(header, ["n", "h", "linf", "l2"]);
    assert_eq!(rows.len(), 3);
    let line = stdout(&out).lines().find(|l| l.starts_with("order")).unwrap().to_string();
    let linf: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((linf - 2.0).abs() < 0.1, "{line}");
}
