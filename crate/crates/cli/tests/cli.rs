use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::process::{Command, Output};

fn holosim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holosim"))
        .args(args)
        .output()
        .expect("run holosim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Csv {
    header: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn parse(text: &str) -> Self {
        let header: Vec<String> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches("# ").to_string())
            .collect();
        let mut body = text.lines().skip(header.len());
        let columns = body.next().unwrap().split(',').map(str::to_string).collect();
        let rows = body
            .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
            .collect();
        Self { header, columns, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn note(&self, key: &str) -> &str {
        let prefix = format!("{key} = ");
        self.header
            .iter()
            .find_map(|l| l.strip_prefix(&prefix))
            .unwrap_or_else(|| panic!("no header entry {key}"))
    }
}

fn run_csv(args: &[&str]) -> Csv {
    let o = holosim(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    Csv::parse(&stdout(&o))
}

#[test]
fn validate_passes_and_reports_oracle_block() {
    let o = holosim(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(!text.contains("FAIL"), "{text}");
    let block: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "[fock oracle]")
        .take_while(|l| !l.is_empty())
        .collect();
    let line = block.iter().find(|l| l.contains("random polynomials")).unwrap();
    let delta: f64 = line.split_whitespace().rev().nth(2).unwrap().parse().unwrap();
    assert!(delta <= 1e-8, "{line}");
}

#[test]
fn validate_catches_flipped_squeezing_sign() {
    let o = holosim(&["validate", "--mutate", "squeezing_sign"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL squeezing sign pairing")), "{text}");
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["frobnicate"][..],
        &["sweep-eta", "--no_such_key", "1"],
        &["sweep-eta", "--mu"],
        &["sweep-fig2", "--n_phi0", "1"],
        &["sweep-fig2", "--lambda_min", "2", "--lambda_max", "1"],
        &["sweep-mu", "--eta", "not-a-number"],
        &["estimate", "--family", "CL"],
        &["estimate", "--fidelity", "approximate"],
        &["validate", "--mutate", "everything"],
    ] {
        let o = holosim(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_files_are_strict_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    fs::write(&good, "# sweep settings\nmu = 1e20\nn_eta = 3\neta_min = 0.5\n").unwrap();
    let csv = run_csv(&["sweep-eta", "--config", good.to_str().unwrap(), "--n_eta", "2"]);
    assert_eq!(csv.note("mu"), "1e20 (config)");
    assert_eq!(csv.note("n_eta"), "2 (flag)");
    assert_eq!(csv.note("lambda"), "0.5 (default)");
    assert_eq!(csv.rows.len(), 2);
    assert_eq!(csv.rows[0][0], 0.5);

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "mu = 1e20\nmu_typo = 3\n").unwrap();
    let o = holosim(&["sweep-eta", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu_typo"));

    let o = holosim(&["sweep-eta", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_byte_for_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["sweep-eta", "--n_eta", "6"],
        &["sweep-mu", "--n_mu", "5"],
        &["sweep-fig2", "--n_lambda", "3", "--n_phi0", "5"],
        &["estimate", "--n_samples", "2000", "--campaigns", "2", "--fidelity", "shot"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("{k}-{rep}.csv"));
            let mut a = args.to_vec();
            a.extend(["--seed", "11", "--out", path.to_str().unwrap()]);
            let o = holosim(&a);
            assert!(o.status.success(), "{args:?}");
            assert!(o.stdout.is_empty());
            bytes.push(fs::read(&path).unwrap());
        }
        assert_eq!(bytes[0], bytes[1], "{args:?}");
        let text = String::from_utf8(bytes.remove(0)).unwrap();
        assert!(text.starts_with(&format!("# holosim {}\n", env!("CARGO_PKG_VERSION"))));
        assert!(text.contains("# seed = 11 (flag)\n"));
    }
}

#[test]
fn estimate_depends_on_seed_only() {
    let a = run_csv(&["estimate", "--n_samples", "5000", "--seed", "3"]);
    let b = run_csv(&["estimate", "--n_samples", "5000", "--seed=3"]);
    let c = run_csv(&["estimate", "--n_samples", "5000", "--seed", "4"]);
    assert_eq!(a.rows, b.rows);
    assert_ne!(a.rows, c.rows);
}

#[test]
fn estimate_recovers_injected_covariance() {
    let csv = run_csv(&["estimate", "--campaigns", "4", "--seed", "100"]);
    let (est, se, truth) = (csv.col("estimate"), csv.col("std_error"), csv.col("true_value"));
    assert_eq!(csv.rows.len(), 4);
    for (k, r) in csv.rows.iter().enumerate() {
        assert_eq!(r[csv.col("seed")], 100.0 + k as f64);
        assert!((r[truth] - 5e-7).abs() < 1e-20);
        assert!((r[est] - r[truth]).abs() < 3.0 * r[se], "{r:?}");
    }
}

#[test]
fn fig2_minimum_runs_along_half_pi() {
    let csv = run_csv(&["sweep-fig2", "--n_lambda", "9", "--n_phi0", "31", "--lambda_max", "50"]);
    let (phi, lam, u) = (csv.col("phi0"), csv.col("lambda"), csv.col("log10_u0"));
    assert_eq!(csv.rows.len(), 9 * 31);
    let step = std::f64::consts::PI / 30.0;
    for row in csv.rows.chunks(31) {
        assert!(row.iter().all(|r| r[lam] == row[0][lam]));
        let best = row.iter().min_by(|a, b| a[u].total_cmp(&b[u])).unwrap();
        assert!((best[phi] - FRAC_PI_2).abs() <= step + 1e-12, "lambda {}: argmin {}", row[0][lam], best[phi]);
    }
    assert!(csv.note("argmin over phi0 within one grid step of pi/2 for every sensitive lambda").starts_with("true"));
    assert_eq!(csv.rows[0][u], f64::INFINITY);
}

#[test]
fn fig2_reproduces_closed_form_rows() {
    let csv = run_csv(&["sweep-fig2", "--lambda_min", "0.5", "--lambda_max", "2", "--n_lambda", "2", "--n_phi0", "3"]);
    let (phi, lam, u) = (csv.col("phi0"), csv.col("lambda"), csv.col("log10_u0"));
    let row = csv.rows.iter().find(|r| r[lam] == 0.5 && r[phi] == FRAC_PI_2).unwrap();
    let value = 10f64.powf(row[u]);
    assert!((value / 3.899e-3 - 1.0).abs() < 1e-4, "{value}");

    let csv = run_csv(&["sweep-fig2", "--lambda_min", "1e-10", "--lambda_max", "1e-9", "--n_lambda", "2", "--n_phi0", "3"]);
    let classical = (2f64.sqrt() / 100.0).log10();
    for r in csv.rows.iter().filter(|r| r[phi] == FRAC_PI_2) {
        assert!((r[u] - classical).abs() < 1e-4, "{r:?}");
    }
}

#[test]
fn eta_sweep_limits() {
    let csv = run_csv(&["sweep-eta", "--n_eta", "11"]);
    let last = csv.rows.last().unwrap();
    assert_eq!(last[csv.col("eta")], 1.0);
    assert!(last[csv.col("ratio_twb")].abs() < 1e-6);
    let lambda: f64 = 0.5;
    let squeezing = ((1.0 + lambda).sqrt() - lambda.sqrt()).powi(2);
    assert!((last[csv.col("ratio_sq")] - squeezing).abs() < 1e-9);
    assert!(csv.rows[0][csv.col("ratio_sq")].is_nan());
    for r in &csv.rows[1..] {
        assert!(r[csv.col("ratio_sq_u2")] >= r[csv.col("ratio_sq")]);
        assert!(r[csv.col("ratio_twb_u2")] >= r[csv.col("ratio_twb")]);
    }
    let crossing: f64 = csv.note("ratio_twb crosses 1 at eta").parse().unwrap();
    assert!((0.6..0.8).contains(&crossing), "{crossing}");
}

#[test]
fn eta_sweep_matches_strong_squeezing_formula() {
    let csv = run_csv(&["sweep-eta", "--lambda", "100", "--mu", "1e9", "--eta_min", "0.5", "--n_eta", "6"]);
    for r in &csv.rows {
        let eta = r[csv.col("eta")];
        let formula = (1.0 - eta) + eta / 400.0;
        assert!((r[csv.col("ratio_sq")] / formula - 1.0).abs() < 0.01, "{r:?}");
    }
}

#[test]
fn mu_sweep_threshold() {
    let csv = run_csv(&["sweep-mu"]);
    let (x, sq0, tw0, sq2, tw2) = (
        csv.col("mu_over_R"),
        csv.col("ratio_sq_u0"),
        csv.col("ratio_twb_u0"),
        csv.col("ratio_sq_u2"),
        csv.col("ratio_twb_u2"),
    );
    assert_eq!(csv.rows[0][x], 1e-6);
    assert_eq!(csv.rows.last().unwrap()[x], 10.0);
    let first = &csv.rows[0];
    assert!(first[sq2] / first[sq0] - 1.0 < 1e-3);
    assert!(first[tw2] / first[tw0] - 1.0 < 1e-3);

    let r: f64 = csv.note("R").parse().unwrap();
    for (name, u0c, u2c) in [("sq", sq0, sq2), ("twb", tw0, tw2)] {
        let mut prev = 0.0;
        for row in &csv.rows {
            let excess = row[u2c] / row[u0c] - 1.0;
            assert!(excess >= prev - 1e-12, "{name}: {row:?}");
            prev = excess;
        }
        let t: f64 = csv.note(&format!("threshold_mu_over_R_{name}")).parse().unwrap();
        let mu: f64 = csv.note(&format!("threshold_mu_{name}")).parse().unwrap();
        assert!((mu / (t * r) - 1.0).abs() < 1e-12);
        assert!((1e22..1e24).contains(&mu), "{name}: {mu:e}");
        for row in &csv.rows {
            let excess = row[u2c] / row[u0c] - 1.0;
            assert_eq!(excess > 0.1, row[x] > t, "{name}: {row:?} vs threshold {t:e}");
        }
    }
}
