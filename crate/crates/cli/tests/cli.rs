use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = ke_lab::run(
        std::iter::once("ke-lab").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

// Header and data rows of a TSV report, metadata lines dropped.
fn tsv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .unwrap()
        .split('\t')
        .map(String::from)
        .collect();
    let rows = lines
        .map(|l| l.split('\t').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = tsv_rows(text);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn identity_scaling_has_zero_deviation() {
    let (code, out, _) = run(&[
        "verify-scaling",
        "--functional",
        "vw",
        "--alpha",
        "1",
        "--beta",
        "1",
    ]);
    assert_eq!(code, 0);
    assert!(column(&out, "deviation").iter().all(|&d| d == 0.0));
    assert!(column(&out, "observed").iter().all(|&d| d == 1.0));
}

#[test]
fn default_sweep_covers_every_functional() {
    let (code, out, _) = run(&["verify-scaling", "--grid", "32"]);
    assert_eq!(code, 0);
    let (_, rows) = tsv_rows(&out);
    assert_eq!(rows.len(), 4 * 12);
    for name in ["vW", "TF", "TF_corrected", "KS_orbital"] {
        assert_eq!(rows.iter().filter(|r| r[0] == name).count(), 12);
    }
}

#[test]
fn uniform_sweep_skips_vanishing_functionals() {
    let (code, out, _) = run(&["verify-scaling", "--family", "uniform", "--grid", "16"]);
    assert_eq!(code, 0);
    assert!(out.contains("# skipped: vW vanishes"));
    let (_, rows) = tsv_rows(&out);
    assert!(rows.iter().all(|r| r[0].starts_with("TF")));
}

#[test]
fn paradox_headline_numbers() {
    let (code, out, _) = run(&[
        "paradox", "--family", "gaussian", "--alpha", "2", "--beta", "2", "--m", "1", "--p", "1",
    ]);
    assert_eq!(code, 0);
    let naive = column(&out, "naive_factor")[0];
    assert!((naive - 2f64.powf(-4.0 / 3.0)).abs() < 1e-14);
    assert!((naive - 0.3969).abs() < 1e-4);
    assert!((column(&out, "corrected_factor")[0] - 1.0).abs() < 1e-14);
}

#[test]
fn gas_ladder_reaches_continuum() {
    let (code, out, _) = run(&["gas-converge", "--nbar", "1", "--ladder", "1e2,1e3,1e4,1e5"]);
    assert_eq!(code, 0);
    let errors = column(&out, "relative_error");
    assert_eq!(errors.len(), 4);
    assert!(*errors.last().unwrap() <= 0.02);
}

#[test]
fn search_summary_meets_bounds() {
    let (code, out, _) = run(&["search", "--ladder", "1e2,1e4"]);
    assert_eq!(code, 0);
    assert!(column(&out, "density_residual").iter().all(|&r| r <= 1e-4));
    assert!(column(&out, "relative_gap").iter().all(|&g| g <= 1e-6));
}

#[test]
fn tabulate_reports_boundary_diagnostic() {
    let (code, out, _) = run(&["tabulate", "--grid", "32"]);
    assert_eq!(code, 0);
    let (_, rows) = tsv_rows(&out);
    assert_eq!(
        rows.iter().filter(|r| r[3] == "KS_boundary_term").count(),
        3
    );
    let gas = rows.iter().find(|r| r[3] == "gas_discrete").unwrap();
    assert_eq!(gas[0], "gas");
}

#[test]
fn json_mirrors_tsv() {
    for args in [
        vec!["paradox"],
        vec!["tabulate", "--grid", "24"],
        vec!["gas-converge", "--ladder", "100,1000"],
    ] {
        let (_, tsv, _) = run(&args);
        let mut json_args = args.clone();
        json_args.extend(["--format", "json"]);
        let (code, json, _) = run(&json_args);
        assert_eq!(code, 0);
        let doc: Value = serde_json::from_str(&json).unwrap();

        let metadata: Vec<String> = tsv
            .lines()
            .filter_map(|l| l.strip_prefix("# "))
            .map(|l| l.split_once(": ").unwrap().0.to_string())
            .collect();
        let keys: Vec<String> = doc["metadata"]
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        assert_eq!(metadata, keys);

        let (header, rows) = tsv_rows(&tsv);
        let columns: Vec<&str> = doc["columns"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_str().unwrap())
            .collect();
        assert_eq!(header, columns);
        let json_rows = doc["rows"].as_array().unwrap();
        assert_eq!(rows.len(), json_rows.len());
        for (row, json_row) in rows.iter().zip(json_rows) {
            for (cell, value) in row.iter().zip(json_row.as_array().unwrap()) {
                match value {
                    Value::Null => assert_eq!(cell, "NA"),
                    Value::String(s) => assert_eq!(cell, s),
                    Value::Number(n) => {
                        assert_eq!(cell.parse::<f64>().unwrap(), n.as_f64().unwrap())
                    }
                    Value::Bool(b) => assert_eq!(cell, &b.to_string()),
                    other => panic!("unexpected {other}"),
                }
            }
        }
    }
}

#[test]
fn validation_errors_exit_with_two() {
    for args in [
        vec!["verify-scaling", "--grid", "8"],
        vec!["verify-scaling", "--grid", "300"],
        vec!["search", "--grid", "16"],
        vec![
            "verify-scaling",
            "--family",
            "uniform",
            "--functional",
            "vw",
        ],
        vec!["paradox", "--alpha", "1,2", "--beta", "1,2,3"],
        vec!["paradox", "--alpha", "-1"],
        vec!["gas-converge", "--ladder", "1.5"],
        vec!["gas-converge", "--nbar", "0"],
        vec!["paradox", "--ne", "-1"],
        vec!["frobnicate"],
    ] {
        let (code, out, err) = run(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(out.is_empty(), "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn failed_checks_exit_with_one() {
    let (code, out, err) = run(&["search", "--ladder", "1e-3"]);
    assert_eq!(code, 1);
    assert!(!out.is_empty());
    assert!(err.contains("check failed"));
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify-scaling"));
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let exe = env!("CARGO_BIN_EXE_ke-lab");
    let output = |threads: &str| {
        let o = Command::new(exe)
            .args(["verify-scaling", "--grid", "40", "--format", "json"])
            .env("KE_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        o.stdout
    };
    let single = output("1");
    assert_eq!(single, output("4"));
    assert_eq!(single, output("0"));

    let bad = Command::new(exe)
        .arg("tabulate")
        .env("KE_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
