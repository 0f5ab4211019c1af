// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;
use lave::cli::{parse_header, Cli};
use lave::rng::{normal_draws, stream_rng};

fn lave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lave"))
        .args(args)
        .env_remove("LAVE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = lave(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Column names and data rows, skipping `#` lines.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (cols, rows)
}

fn returns_file(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let path = dir.join("returns.csv");
    let mut body = String::from("date,return\n");
    for (i, x) in normal_draws(&mut stream_rng(seed, 0), n).iter().enumerate() {
        body.push_str(&format!("d{i},{}\n", 0.01 * x));
    }
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn estimate_on_homogeneous_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // median across independent homogeneous paths, since one false alarm resets a single path
    let mut per_path: Vec<Vec<f64>> = Vec::new();
    for seed in 0..21 {
        let input = returns_file(dir.path(), 400, seed);
        ok(&[
            "estimate",
            "--input",
            input.to_str().unwrap(),
            "--lambda",
            "2.74",
            "--out",
            out,
            "--deterministic",
        ]);
        let (cols, rows) = table(&dir.path().join("estimate.csv"));
        assert_eq!(cols, ["t", "sigma_hat", "interval_len", "date"]);
        assert_eq!(rows.len(), 400 - 20 + 1);
        assert_eq!(rows[0][0], "20");
        assert_eq!(rows[0][3], "d19");
        let sigma: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
        assert!(sigma.iter().all(|s| *s > 0.0));
        per_path.push(rows.iter().map(|r| r[2].parse().unwrap()).collect());
    }
    let medians: Vec<f64> = (0..per_path[0].len())
        .map(|i| {
            let mut c: Vec<f64> = per_path.iter().map(|p| p[i]).collect();
            c.sort_by(f64::total_cmp);
            c[c.len() / 2]
        })
        .collect();
    let blocks: Vec<f64> = medians
        .chunks(medians.len().div_ceil(4))
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_by(f64::total_cmp);
            c[c.len() / 2]
        })
        .collect();
    assert!(blocks.windows(2).all(|w| w[1] >= w[0]), "{blocks:?}");
    assert!(blocks[3] > 4.0 * medians[0], "{blocks:?}");
}

#[test]
fn outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, workers: &str| {
        ok(&[
            "simulate",
            "--segments",
            "60:1,60:4,60:1",
            "--reps",
            "30",
            "--lambda",
            "2.4",
            "--seed",
            "11",
            "--deterministic",
            "--workers",
            workers,
            "--out",
            dir.to_str().unwrap(),
        ]);
    };
    run(a.path(), "1");
    run(b.path(), "2");
    for f in ["errors.csv", "curves.csv"] {
        let x = std::fs::read_to_string(a.path().join(f)).unwrap();
        let y = std::fs::read_to_string(b.path().join(f)).unwrap();
        // identical apart from the recorded output directory and worker count
        let strip = |s: &str| {
            s.lines()
                .filter(|l| !l.starts_with("# args:"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&x), strip(&y), "{f}");
    }
    let stamped = tempfile::tempdir().unwrap();
    ok(&[
        "stats",
        "--design",
        "regimes",
        "--out",
        stamped.path().to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(stamped.path().join("stats.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# generated: ")));
}

#[test]
fn header_round_trips_through_parser() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("with space");
    let args = [
        "lave",
        "simulate",
        "--design",
        "paper-63-small",
        "--reps",
        "5",
        "--gamma",
        "1",
        "--lambda",
        "paper:40",
        "--out",
        out.to_str().unwrap(),
        "--deterministic",
    ];
    ok(&args[1..]);
    let original = Cli::try_parse_from(args).unwrap();
    assert_eq!(parse_header(&out.join("errors.csv")).unwrap(), original);
    assert_eq!(parse_header(&out.join("curves.csv")).unwrap(), original);
}

#[test]
fn seed_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lave"))
        .args([
            "stats",
            "--design",
            "paper-63-large",
            "--deterministic",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("LAVE_SEED", "77")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert!(text.contains("# seed: 77\n"));
    let (cols, rows) = table(&dir.path().join("stats.csv"));
    assert_eq!(cols, ["label", "n", "mean", "variance", "skewness", "kurtosis"]);
    assert_eq!(rows[0][1], "240");
    assert!(rows[0][5].parse::<f64>().unwrap() > 3.0);
}

#[test]
fn calibrate_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "calibrate",
        "--gamma",
        "0.5",
        "--M",
        "40",
        "--deterministic",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let (cols, rows) = table(&dir.path().join("calibration.csv"));
    assert_eq!(
        cols,
        [
            "gamma",
            "M",
            "m0",
            "alpha",
            "lambda",
            "achieved_rate",
            "replications",
            "seed"
        ]
    );
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..4], ["0.5", "40", "10", "0.05"]);
    assert!((rows[0][5].parse::<f64>().unwrap() - 0.05).abs() <= 0.02);
}

#[test]
fn calibrate_matches_reference_lambda() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "calibrate",
        "--gamma",
        "0.5",
        "--M",
        "40",
        "--deterministic",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let (_, rows) = table(&dir.path().join("calibration.csv"));
    let lambda: f64 = rows[0][4].parse().unwrap();
    assert!(
        (lambda - 2.40).abs() <= 0.15,
        "calibrated lambda {lambda}, reference 2.40"
    );
}

#[test]
fn simulate_three_segment_layout() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "--design",
        "paper-63",
        "--gamma-grid",
        "paper",
        "--reps",
        "10",
        "--deterministic",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    for sub in ["small_jump", "large_jump"] {
        let (cols, rows) = table(&dir.path().join(sub).join("errors.csv"));
        assert_eq!(cols, ["gamma", "lambda", "M_label", "error"]);
        assert_eq!(rows.len(), 6);
        let (cols, rows) = table(&dir.path().join(sub).join("curves.csv"));
        assert_eq!(
            &cols[..8],
            [
                "t",
                "sigma_true",
                "sigma_hat_median",
                "q25",
                "q75",
                "len_median",
                "len_q25",
                "len_q75"
            ]
        );
        assert_eq!(rows.len(), 6 * 221);
    }
}

#[test]
fn constants_backtest_and_acf_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["constants", "--out", out, "--deterministic"]);
    let (cols, rows) = table(&dir.path().join("constants.csv"));
    assert_eq!(cols, ["gamma", "c_gamma", "d_gamma", "s_gamma", "a_gamma"]);
    assert!((rows[0][4].parse::<f64>().unwrap() - 1.005).abs() < 0.002);
    let (cols, rows) = table(&dir.path().join("laplace_curve.csv"));
    assert_eq!(&cols[..2], ["u", "ratio"]);
    assert_eq!(rows.len(), 400);

    ok(&[
        "backtest",
        "--design",
        "regimes",
        "--lambda",
        "2.74",
        "--out",
        out,
        "--deterministic",
    ]);
    let (cols, rows) = table(&dir.path().join("backtest.csv"));
    assert_eq!(cols, ["label", "gamma", "M_label", "ratio"]);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][3].parse::<f64>().unwrap() > 0.0);
    let (cols, rows) = table(&dir.path().join("forecasts_regimes.csv"));
    assert_eq!(&cols[..3], ["t", "realized_sq", "garch"]);
    assert_eq!(rows.len(), 1500 - 350);

    ok(&[
        "acf",
        "--design",
        "paper-63-large",
        "--lambda",
        "2.74",
        "--out",
        out,
        "--deterministic",
    ]);
    for f in ["acf_raw.csv", "acf_standardized.csv"] {
        let (cols, rows) = table(&dir.path().join(f));
        assert_eq!(cols, ["lag", "value"]);
        assert_eq!(rows.len(), 51);
        assert_eq!(rows[0][1], "1");
    }
}

#[test]
fn failures_report_code_and_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let check = |args: &[&str], code: i32, kind: &str| {
        let o = lave(args);
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        let line = err.lines().find(|l| l.starts_with("error: code=")).expect("error line");
        assert!(
            line.starts_with(&format!("error: code={code} kind={kind} message=\"")),
            "{line}"
        );
    };
    check(
        &[
            "estimate", "--design", "regimes", "--gamma", "-1", "--lambda", "2", "--out", out,
        ],
        3,
        "domain",
    );
    check(
        &[
            "estimate",
            "--input",
            "/nonexistent/r.csv",
            "--lambda",
            "2",
            "--out",
            out,
        ],
        12,
        "io",
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    check(
        &[
            "estimate",
            "--input",
            bad.to_str().unwrap(),
            "--lambda",
            "2",
            "--out",
            out,
        ],
        13,
        "input",
    );
    check(&["estimate", "--out", out], 2, "usage");
    check(&["frobnicate"], 2, "usage");
    check(&["calibrate", "--M", "15", "--out", out], 3, "domain");
    check(
        &["estimate", "--design", "regimes", "--lambda", "paper:60", "--out", out],
        8,
        "unsupported",
    );
}
