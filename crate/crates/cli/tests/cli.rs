use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ico_battery_cli::{
    bursts, check_rows, noise_study, sweep, CliError, Engine, SweepConfig, SweepRow, Verdict,
};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ico-battery")).args(args).output().expect("binary runs")
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn sweep_csv_shape_and_empty_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = bin(&["sweep", "--n", "2,3", "--points", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["N", "t", "E", "W_ico", "P_ico", "W_dco", "P_dco", "p1", "passive_k1", "passive_dco"]);
    assert_eq!(rows.len(), 4);
    // t = 0: E = 0, efficiencies undefined
    assert_eq!(rows[0][1], "0");
    assert_eq!(rows[0][4], "");
    assert_eq!(rows[0][6], "");
}

#[test]
fn sweep_engine_both_reports_deviation_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = bin(&["sweep", "--n", "2", "--points", "5", "--engine", "both", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&out);
    assert_eq!(header.last().unwrap(), "max_engine_dev");
    for r in rows {
        assert!(r[10].parse::<f64>().unwrap() <= 1e-9);
    }
}

#[test]
fn engines_agree_across_chargers() {
    let cfg = SweepConfig { n_list: vec![2, 3, 4, 5], points: 200, engine: Engine::Both, ..SweepConfig::default() };
    let rows = sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 800);
    check_rows(&rows).unwrap();
    let worst = rows.iter().filter_map(|r| r.max_engine_dev).fold(0.0, f64::max);
    assert!(worst <= 1e-9, "{worst}");
    assert!(rows.iter().all(|r| r.w_ico >= r.w_dco - 1e-10));
}

#[test]
fn row_at_two_pi() {
    let cfg = SweepConfig { t_max: Some(4.0 * PI), points: 3, engine: Engine::Both, ..SweepConfig::default() };
    let rows = sweep(&cfg).unwrap();
    let r = rows[1];
    assert_eq!(r.t, 2.0 * PI);
    assert!((r.p_ico.unwrap() - 0.9994).abs() < 1e-4);
    assert_eq!(r.p_dco, Some(0.0));
}

#[test]
fn bursts_examples() {
    let report = bursts(&SweepConfig::default()).unwrap();
    let n2 = &report.per_n[0];
    let b = n2.intervals.iter().find(|b| b.t_a <= 2.0 * PI && 2.0 * PI <= b.t_b).expect("burst around 2π");
    assert!(b.t_a > 0.0 && b.t_b < 11.43);
    assert!(b.max_p_ico >= 0.99);
    assert!((n2.t_star - 11.437).abs() < 0.01);

    let none = bursts(&SweepConfig { tau: 1.01, n_list: vec![2, 3], ..SweepConfig::default() }).unwrap();
    assert!(none.per_n.iter().all(|b| b.intervals.is_empty() && b.total_duration == 0.0));

    let grow = bursts(&SweepConfig { n_list: vec![2, 3, 4, 5], engine: Engine::Analytic, ..SweepConfig::default() })
        .unwrap();
    assert_eq!(grow.monotonicity, Verdict::Pass);
    for w in grow.per_n.windows(2) {
        assert!(w[1].t_star > w[0].t_star);
    }
}

#[test]
fn bursts_json_from_binary() {
    let o = bin(&["bursts", "--n", "2,3", "--points", "100"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["monotonicity"], "pass");
    assert_eq!(v["per_n"].as_array().unwrap().len(), 2);
}

#[test]
fn export_circuits_writes_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("qasm");
    let o = bin(&["export-circuits", "--points", "10", "--out", target.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&target.join("manifest.csv"));
    assert_eq!(header, ["index", "t", "theta", "phi", "file"]);
    assert_eq!(rows.len(), 10);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[4], format!("ico_n2_t{i}.qasm"));
        let t: f64 = r[1].parse().unwrap();
        let theta: f64 = r[2].parse().unwrap();
        assert!((theta - 0.1 * t / 2.0).abs() < 1e-12);
        let text = fs::read_to_string(target.join(&r[4])).unwrap();
        assert!(text.starts_with("OPENQASM 3.0;"));
    }
    let first = fs::read(target.join("ico_n2_t3.qasm")).unwrap();
    let again = dir.path().join("again");
    assert!(bin(&["export-circuits", "--points", "10", "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(again.join("ico_n2_t3.qasm")).unwrap(), first);

    let o = bin(&["export-circuits", "--n", "3", "--out", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn noise_study_noiseless_is_consistent() {
    let cfg = SweepConfig { points: 40, shots: Some(20_000), depolarizing_p: Some(0.0), seed: 5, ..SweepConfig::default() };
    for r in noise_study(&cfg).unwrap() {
        assert!((r.e_hat - r.e).abs() <= 3.0 * r.e_se + 1e-12, "t = {}", r.t);
    }
}

#[test]
fn noise_study_depolarizing_overestimates_and_lowers_efficiency() {
    let cfg =
        SweepConfig { points: 120, shots: Some(20_000), depolarizing_p: Some(0.05), seed: 17, ..SweepConfig::default() };
    let rows = noise_study(&cfg).unwrap();
    let t_star = 11.437;
    let mut small = 0;
    for r in &rows {
        if r.e < 0.2 {
            assert!(r.e_hat - r.e > 3.0 * r.e_se, "t = {}", r.t);
            assert!(r.overestimate);
            small += 1;
        }
        if r.t > 3.0 && r.t < 9.0 {
            assert!(r.p_hat.unwrap() < r.p_ico.unwrap(), "t = {}", r.t);
        }
        assert!(r.t > t_star || r.e < 0.5);
    }
    assert!(small > 5);
}

#[test]
fn noise_study_requires_shots_and_two_chargers() {
    let o = bin(&["noise-study", "--depol-p", "0.05"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["noise-study", "--shots", "10", "--depol-p", "0.05", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn noise_study_shot_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n.csv");
    let shots = dir.path().join("shots.csv");
    let o = bin(&[
        "noise-study", "--points", "4", "--shots", "1000", "--depol-p", "0.05", "--seed", "3", "--out",
        out.to_str().unwrap(), "--shots-out", shots.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = ico_battery_core::circuit::read_shot_records(fs::File::open(&shots).unwrap()).unwrap();
    assert_eq!(records.len(), 4);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.seed, 3 + i as u64);
        assert_eq!(r.shots, 1000);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"N_list": [2, 3], "points": 7, "engine": "analytic"}"#).unwrap();
    let out = dir.path().join("s.csv");
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--points", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(csv_rows(&out).1.len(), 6);

    fs::write(&cfg, r#"{"points": "many"}"#).unwrap();
    assert_eq!(bin(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["sweep", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
}

#[test]
fn invalid_flags_exit_with_config_code() {
    assert_eq!(bin(&["sweep", "--points", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["sweep", "--t-min", "5", "--t-max", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["sweep", "--lambda", "0"]).status.code(), Some(2));
}

#[test]
fn invariant_violations_map_to_exit_three() {
    let row = SweepRow {
        n: 2,
        t: 1.0,
        e: 0.1,
        w_ico: 0.0,
        p_ico: Some(0.0),
        w_dco: 0.0,
        p_dco: Some(0.0),
        p1: 1.0,
        passive_k1: true,
        passive_dco: true,
        max_engine_dev: Some(1e-6),
    };
    let err = check_rows(&[row]).unwrap_err();
    assert!(matches!(err, CliError::Invariant(_)));
    assert_eq!(err.exit_code(), 3);
}
