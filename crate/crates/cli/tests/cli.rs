use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbs-transfer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_model(name: &str, text: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Value of the `log10_c` column of a one-row constant CSV.
fn log10_from_csv(out: &Output) -> f64 {
    let text = stdout(out);
    let row = text.lines().nth(1).expect("data row");
    row.split(',').nth(3).unwrap().parse().unwrap()
}

#[test]
fn constant_of_the_binary_chain() {
    let out = run(&["constant", "@example1", "--length", "10"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("3.3441E+04"));

    let out = run(&["constant", "@example1", "--length", "500", "--method", "sweep", "--output", "csv"]);
    assert!(out.status.success());
    assert!((log10_from_csv(&out) - 220.8113).abs() < 1e-3);
}

#[test]
fn constant_of_zero_potentials() {
    let path = write_model(
        "zero12.json",
        r#"{"kind": "chain", "n_states": 2, "length": 12, "homogeneous": true, "h": [[0e0, 0e0], [0e0, 0e0]]}"#,
    );
    let out = run(&["constant", &path, "--output", "csv"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("4.0960E+03"));
    assert!((log10_from_csv(&out) - 4096f64.log10()).abs() < 1e-9);
}

#[test]
fn methods_agree_from_the_command_line() {
    let mut values = Vec::new();
    for method in ["auto", "power", "sweep", "eig2x2", "eig", "future", "oracle"] {
        let out = run(&["constant", "@example1", "--length", "16", "--method", method, "--output", "csv"]);
        assert!(out.status.success(), "{method}");
        values.push(log10_from_csv(&out));
    }
    assert!(values.iter().all(|v| (v - values[0]).abs() < 1e-10));
}

#[test]
fn inapplicable_method_is_a_usage_error() {
    let out = run(&["constant", "@example2", "--length", "10", "--method", "eig2x2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["constant", "@example1", "--method", "fastest"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_beyond_budget_is_a_capacity_error() {
    let out = run(&["constant", "@example1", "--length", "40", "--method", "oracle"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["constant", "@example1", "--length", "12", "--method", "oracle", "--cap", "100"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_model_files() {
    let path = write_model(
        "inf.json",
        r#"{"kind": "chain", "n_states": 2, "length": 3, "homogeneous": true, "h": [[0, Infinity], [0, 0]]}"#,
    );
    let out = run(&["constant", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
    let out = run(&["constant", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn uniform_single_site_marginal() {
    let path = write_model(
        "uniform.json",
        r#"{"kind": "chain", "n_states": 2, "length": 5, "homogeneous": true, "h": [[0, 0], [0, 0]]}"#,
    );
    let out = run(&["marginal", &path, "--sites", "1", "--output", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "z1,probability");
    assert_eq!(rows[1], "0,5.00000000000000e-1");
    assert_eq!(rows[2], "1,5.00000000000000e-1");
}

#[test]
fn two_site_marginal_table() {
    let out = run(&["marginal", "@example1", "--length", "6", "--sites", "2,5", "--output", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0], "z2,z5,probability");
    // frozen from exhaustive enumeration
    let expected = [0.235137905325220, 0.251717229702070, 0.251717229702070, 0.261427635270641];
    for (row, p) in rows[1..5].iter().zip(expected) {
        let got: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((got - p).abs() < 1e-12);
    }
    assert!(rows[5].starts_with("sum,,"));
}

#[test]
fn single_probability() {
    let table = run(&["marginal", "@example1", "--length", "6", "--sites", "1,2"]);
    let single = run(&["marginal", "@example1", "--length", "6", "--sites", "1,2", "--config", "1,0"]);
    assert!(single.status.success());
    let p: f64 = stdout(&single).trim().parse().unwrap();
    let row = stdout(&table).lines().nth(3).unwrap().to_string();
    let q: f64 = row.split_whitespace().last().unwrap().parse().unwrap();
    assert!((p - q).abs() < 1e-14);
}

#[test]
fn site_out_of_range() {
    let out = run(&["marginal", "@example1", "--length", "6", "--sites", "2,9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["marginal", "@example1", "--length", "6", "--sites", "3,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ladder_fixed_point() {
    let out = run(&["dichotomous", "ladder", "--alpha", "1", "--beta", "0", "--r", "4", "--output", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "j,alpha_j,beta_j");
    assert_eq!(rows.len(), 6);
    for row in &rows[1..] {
        let f: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - 1.0).abs() < 1e-15 && f[2] == 0.0, "{row}");
    }
}

#[test]
fn dichotomous_constant_matches_the_chain() {
    let out = run(&[
        "dichotomous", "constant", "--alpha", "1", "--beta", "-0.8", "--r", "3", "--output", "csv",
    ]);
    assert!(out.status.success());
    let via_ladder = log10_from_csv(&out);
    // spins −1, +1 at indices 0, 1: h(u, v) = α s_u + β s_u s_v
    let path = write_model(
        "ising9.json",
        r#"{"kind": "chain", "n_states": 2, "length": 9, "homogeneous": true, "labels": ["-1", "+1"],
            "h": [[-1.8, -0.2], [1.8, 0.2]]}"#,
    );
    let out = run(&["constant", &path, "--output", "csv"]);
    assert!(out.status.success());
    assert!((log10_from_csv(&out) - via_ladder).abs() < 1e-9);
}

#[test]
fn dichotomous_joint() {
    let args = ["dichotomous", "joint", "--alpha", "0", "--beta", "0", "--r", "2", "--z"];
    let out = run(&[&args[..], &["-1,1,1,-1,1"]].concat());
    assert!(out.status.success());
    let p: f64 = stdout(&out).trim().parse().unwrap();
    assert!((p - 1.0 / 32.0).abs() < 1e-14);
    let out = run(&[&args[..], &["-1,1"]].concat());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[&args[..], &["-1,1,0,1,1"]].concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spatial_constant_factorized_law() {
    let out = run(&[
        "spatial-constant", "--m", "3", "--T", "4", "--alpha", "0.7", "--beta", "0", "--delta", "0", "--output", "csv",
    ]);
    assert!(out.status.success());
    let expected = 12.0 * (2.0 * 0.7f64.cosh()).log10();
    assert!((log10_from_csv(&out) - expected).abs() < 1e-9);
}

#[test]
fn spatial_low_rank_reports_its_error() {
    let out = run(&[
        "spatial-constant", "--m", "4", "--T", "6", "--alpha", "0.2", "--beta", "0.1", "--delta", "-0.3",
        "--approx-rank", "16", "--seed", "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let error: f64 = text
        .lines()
        .find(|l| l.contains("Frobenius"))
        .and_then(|l| l.rsplit('=').next())
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    // full rank: the factorization is exact up to rounding
    assert!(error < 1e-10);
}

#[test]
fn bench_csv_is_stable_and_agrees() {
    let args = ["bench", "table1", "--sizes", "10,20,25", "--no-timing"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.iter().all(|r| r.ends_with(",agree")));
    for (t, log10) in [("T=10,", 4.52427), ("T=20,", 8.93830), ("T=25,", 11.14532)] {
        for r in rows.iter().filter(|r| r.contains(t)) {
            let v: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
            assert!((v - log10).abs() < 1e-3);
        }
    }
    assert!(rows.iter().any(|r| r.contains("T=20,oracle")));
}

#[test]
fn bench_table3_and_single_size() {
    let out = run(&["bench", "table3", "--sizes", "500,1000", "--no-timing"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for (t, log10) in [("T=500,", 350.3743), ("T=1000,", 700.7585)] {
        let row = text.lines().find(|r| r.contains(t)).unwrap();
        let v: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((v - log10).abs() < 1e-2);
    }
    let out = run(&["bench", "table2", "--sizes", "1000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().contains("seconds"));
    assert!(text.lines().skip(1).all(|r| r.contains("T=1000,")));
}

#[test]
fn oracle_check_passes() {
    let out = run(&["oracle-check"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "table9"]).status.code(), Some(2));
}
