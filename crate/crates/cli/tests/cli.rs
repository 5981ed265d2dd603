use std::path::Path;
use std::process::{Command, Output};

fn snm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snm")).args(args).output().expect("running snm")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "snm failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn moment_value(args: &[&str]) -> f64 {
    let mut full = vec!["moment"];
    full.extend_from_slice(args);
    let v: serde_json::Value = serde_json::from_str(&stdout(&snm(&full))).unwrap();
    v["value"].as_f64().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn moment_gamma_gini_equals_population_value() {
    let g2 = 0.375; // Gamma(2.5) / (sqrt(pi) Gamma(3))
    let v = moment_value(&["--dist", "gamma(shape=2,scale=1)", "--stat", "gini", "--n", "7"]);
    assert!((v - g2).abs() < 1e-10, "{v}");
}

#[test]
fn moment_bernoulli_gini_includes_atom() {
    let v = moment_value(&["--dist", "bernoulli(p=0.5)", "--stat", "gini", "--n", "2", "--r", "0.9"]);
    assert!((v - 0.725).abs() < 1e-10, "{v}");
}

#[test]
fn moment_exponential_scv() {
    let v = moment_value(&["--dist", "exponential(rate=1)", "--stat", "scv", "--n", "2"]);
    assert!((v - 2.0 / 3.0).abs() < 1e-10, "{v}");
}

#[test]
fn moment_reports_diagnostics() {
    let out = stdout(&snm(&["moment", "--dist", "gamma(shape=0.5)", "--n", "5"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["stat"], "gini");
    assert_eq!(v["moment"]["converged"], true);
    assert!(v["moment"]["evaluations"].as_u64().unwrap() > 0);
    assert!((v["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn config_errors_exit_with_two() {
    let cases: [&[&str]; 6] = [
        &["moment", "--dist", "weibull(k=2)", "--n", "3"],
        &["moment", "--n", "3"],
        &["moment", "--dist", "gamma(shape=1)", "--n", "1"],
        &["bias-curve", "--grid", "3:1:0.1"],
        &["bias-curve", "--format", "svg+csv"],
        &["moment", "--dist", "pareto(shape=1.5)", "--stat", "scv", "--n", "3"],
    ];
    for args in cases {
        let out = snm(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn gamma_bias_curve_has_unit_ratio() {
    let out = stdout(&snm(&["bias-curve", "--dist", "gamma(shape=1)", "--grid", "0.5:3:0.5", "--n", "2,7"]));
    let mut rd = csv::Reader::from_reader(out.as_bytes());
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..8], ["family", "param", "n", "stat", "population_value", "expected_value", "ratio_R", "quad_error"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(&r[0], "gamma");
        let ratio: f64 = r[6].parse().unwrap();
        assert!((ratio - 1.0).abs() < 1e-8, "{r:?}");
    }
    // ordered by n, then parameter
    assert_eq!((&rows[0][2], &rows[0][1]), ("2", "0.5"));
    assert_eq!((&rows[6][2], &rows[6][1]), ("7", "0.5"));
}

#[test]
fn pareto_bias_curve_is_below_one_and_rises() {
    let out = stdout(&snm(&["bias-curve", "--grid", "1.2:2.8:0.4", "--n", "3,10"]));
    let mut rd = csv::Reader::from_reader(out.as_bytes());
    let rows: Vec<(usize, f64)> =
        rd.records().map(|r| r.unwrap()).map(|r| (r[2].parse().unwrap(), r[6].parse().unwrap())).collect();
    assert!(rows.iter().all(|&(_, ratio)| ratio < 1.0));
    let small: Vec<f64> = rows.iter().filter(|r| r.0 == 3).map(|r| r.1).collect();
    let large: Vec<f64> = rows.iter().filter(|r| r.0 == 10).map(|r| r.1).collect();
    assert!(small.windows(2).all(|w| w[1] > w[0]));
    assert!(small.iter().zip(&large).all(|(a, b)| b > a));
}

#[test]
fn point_mass_curve_is_zero() {
    let out = stdout(&snm(&["bias-curve", "--dist", "pointmass(value=1)", "--n", "3"]));
    let line = out.lines().nth(1).unwrap();
    let f: Vec<&str> = line.split(',').collect();
    assert_eq!((f[4], f[5]), ("0.0", "0.0"));
}

#[test]
fn svg_regenerates_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let csv_s = csv.to_str().unwrap();
    stdout(&snm(&["scv-curve", "--grid", "1:3:1", "--n", "2,5", "--format", "svg+csv", "--out", csv_s]));
    let svg = read(&csv.with_extension("svg"));
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    let again = dir.path().join("again.svg");
    stdout(&snm(&["plot", "--csv", csv_s, "--out", again.to_str().unwrap()]));
    assert_eq!(read(&again), svg);
}

#[test]
fn debias_experiment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = ["debias-experiment", "--grid", "1.5:2.5:1", "--n", "20", "--reps", "1000", "--seed", "7"];
        let mut full = args.to_vec();
        full.extend(["--format", "svg+csv", "--out", out.to_str().unwrap()]);
        stdout(&snm(&full));
        (read(&out), read(&out.with_extension("svg")))
    };
    let (csv_a, svg_a) = run("a.csv");
    let (csv_b, svg_b) = run("b.csv");
    assert_eq!(csv_a, csv_b);
    assert_eq!(svg_a, svg_b);
    assert!(csv_a.starts_with("alpha,n,method,bias,abs_bias,std_error"));
    assert_eq!(csv_a.lines().count(), 1 + 2 * 5);
    assert!(svg_a.contains("abs_bias, n=20"));
}

#[test]
fn debias_experiment_requires_pareto() {
    let out = snm(&["debias-experiment", "--dist", "gamma(shape=2)", "--reps", "1000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "dist = \"gamma(shape=2)\"\nstat = \"scv\"\nn = [4]\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = moment_value(&["--config", c]);
    assert!((v - 4.0 / 9.0).abs() < 1e-10, "{v}");
    let v = moment_value(&["--config", c, "--n", "2"]);
    assert!((v - 2.0 / 5.0).abs() < 1e-10, "{v}");
}

#[test]
fn json_format_lists_rows() {
    let out = stdout(&snm(&["variance-curve", "--grid", "1:2:1", "--n", "2", "--format", "json"]));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.len(), 2);
    // exponential, n = 2: Var G_hat = 1/12
    assert!((rows[0]["variance"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-10);
}

#[test]
fn validate_single_suite_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = stdout(&snm(&["validate", "--suite", "gamma-unbiasedness", "--out", report.to_str().unwrap()]));
    assert!(out.starts_with("PASS C2 gamma-unbiasedness"));
    let v: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(v["suites"][0]["pass"], true);
    assert_eq!(v["suites"][0]["checks"].as_array().unwrap().len(), 16);
}

#[test]
fn validate_unknown_suite_is_a_config_error() {
    assert_eq!(snm(&["validate", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn estimate_reads_values_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    std::fs::write(&data, "x\n1\n2\n3\n4\n").unwrap();
    let from_file: serde_json::Value =
        serde_json::from_str(&stdout(&snm(&["estimate", "--data", data.to_str().unwrap()]))).unwrap();
    let inline: serde_json::Value = serde_json::from_str(&stdout(&snm(&["estimate", "--values", "1,2,3,4"]))).unwrap();
    assert_eq!(from_file, inline);
    // mean absolute difference over ordered pairs 20/12, divided by 2 * mean
    assert!((inline["gini"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(inline["estimators"].as_array().unwrap().len(), 5);
    assert_eq!(snm(&["estimate", "--values", "1,-2"]).status.code(), Some(2));
}
