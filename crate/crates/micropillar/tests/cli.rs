use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use micropillar_core::pillar_mode::{solve_fundamental_mode, PillarGeometry};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_micropillar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> (String, String) {
    let o = cli(args);
    let stderr = String::from_utf8_lossy(&o.stderr).into_owned();
    assert!(o.status.success(), "{args:?} failed: {stderr}");
    (String::from_utf8(o.stdout).unwrap(), stderr)
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn value_after(text: &str, key: &str) -> f64 {
    let start = text.find(key).unwrap_or_else(|| panic!("'{key}' missing in {text}")) + key.len();
    text[start..]
        .split_whitespace()
        .next()
        .unwrap()
        .trim_end_matches(',')
        .parse()
        .unwrap()
}

#[test]
fn dbr_reports_top_mirror_transmission() {
    let (data, summary) = ok(&["dbr", &cfg("dbr_top9.cfg")]);
    let t = value_after(&summary, "T(950 nm) = ");
    assert!((t - 0.07).abs() <= 0.03, "T = {t}");
    assert!(data.starts_with("# micropillar "));
    assert_eq!(data_rows(&data).len(), 801);
}

#[test]
fn empty_stack_is_a_fresnel_interface() {
    let dir = tempfile::tempdir().unwrap();
    let stack = dir.path().join("bare.stack");
    std::fs::write(&stack, "ambient 1.0\nsubstrate 3.5\n").unwrap();
    let (_, summary) = ok(&["dbr", "--set", &format!("stack={}", stack.display())]);
    let t = value_after(&summary, "T(950 nm) = ");
    let fresnel = 1.0 - ((1.0 - 3.5f64) / (1.0 + 3.5)).powi(2);
    assert!((t - fresnel).abs() < 1e-12);
}

#[test]
fn malformed_stack_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let stack = dir.path().join("bad.stack");
    std::fs::write(&stack, "ambient 1\nlayer 3.5 67.9\nlayer 2.95\n").unwrap();
    let o = cli(&["dbr", "--set", &format!("stack={}", stack.display())]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.stack:3:"), "{err}");
}

#[test]
fn cavity_q_for_both_finesses() {
    let dir = tempfile::tempdir().unwrap();
    for (name, target) in [("cavity_q_low.cfg", 1000.0), ("cavity_q_high.cfg", 5000.0)] {
        let out = dir.path().join("q.csv");
        ok(&["cavity-q", &cfg(name), "--out", &out.display().to_string()]);
        let rows = data_rows(&std::fs::read_to_string(&out).unwrap());
        let q: f64 = rows[0][1].parse().unwrap();
        assert!((q / target - 1.0).abs() <= 0.3, "{name}: Q = {q}");
    }
}

#[test]
fn mode_table_matches_the_library() {
    let (data, _) = ok(&["mode", &cfg("mode.cfg"), "--set", "d_min=1", "--set", "d_max=1"]);
    let rows = data_rows(&data);
    assert_eq!(rows.len(), 1);
    let m = solve_fundamental_mode(&PillarGeometry::new(1.0, 3.5, 1.0, 950.0).unwrap()).unwrap();
    let u: f64 = rows[0][1].parse().unwrap();
    assert!((u - m.u).abs() < 1e-11);
    let theta: f64 = rows[0][9].parse().unwrap();
    assert!((theta - 12.0).abs() <= 4.0);
}

fn blocks(text: &str) -> Vec<(f64, Vec<Vec<f64>>)> {
    let mut out: Vec<(f64, Vec<Vec<f64>>)> = Vec::new();
    for line in text.lines() {
        if let Some(q) = line.strip_prefix("# block q_2d = ") {
            out.push((q.parse().unwrap(), Vec::new()));
        } else if !line.starts_with('#') && !line.is_empty() && !line.starts_with("diameter_um") {
            out.last_mut()
                .unwrap()
                .1
                .push(line.split(',').map(|x| x.parse().unwrap()).collect());
        }
    }
    out
}

#[test]
fn fig3_sweep_has_four_blocks() {
    let (data, _) = ok(&["sweep", &cfg("fig3_sweep.cfg")]);
    let b = blocks(&data);
    assert_eq!(
        b.iter().map(|x| x.0).collect::<Vec<_>>(),
        vec![500.0, 1000.0, 2000.0, 5000.0]
    );
    let (_, rows) = &b[2];
    let best = rows.iter().max_by(|x, y| x[4].partial_cmp(&y[4]).unwrap()).unwrap();
    assert!((best[4] - 0.73).abs() <= 0.05, "eta = {}", best[4]);
    assert!((best[0] - 2.0).abs() <= 1.0);
}

#[test]
fn single_point_sweep() {
    let (data, _) = ok(&[
        "sweep",
        &cfg("fig3_sweep.cfg"),
        "--set",
        "q_2d=2000",
        "--set",
        "d_min=2",
        "--set",
        "d_max=2",
    ]);
    let b = blocks(&data);
    assert_eq!(b.len(), 1);
    assert_eq!(b[0].1.len(), 1);
}

#[test]
fn ideal_extrinsics_make_eta_equal_beta() {
    let (data, _) = ok(&[
        "sweep",
        &cfg("fig3_sweep.cfg"),
        "--set",
        "alpha=0",
        "--set",
        "q_ext=inf",
    ]);
    for line in data
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty() && !l.starts_with("diam"))
    {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3], cols[4]);
    }
}

#[test]
fn sweep_failure_names_the_diameter() {
    let o = cli(&["sweep", &cfg("fig3_sweep.cfg"), "--set", "q_ext=1000"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("d = 0.3"));
}

#[test]
fn optimize_reports_global_best() {
    let (data, _) = ok(&["optimize", &cfg("optimize.cfg")]);
    let rows = data_rows(&data);
    assert_eq!(rows.len(), 4);
    let line = data.lines().find(|l| l.starts_with("# global best")).unwrap();
    let eta = value_after(line, "eta = ");
    let q = value_after(line, "q_2d = ");
    let d = value_after(line, " d = ");
    assert!((eta - 0.73).abs() <= 0.05 && (1000.0..=4000.0).contains(&q) && (1.0..=3.0).contains(&d));
}

#[test]
fn optimize_edge_cases() {
    let (data, _) = ok(&["optimize", &cfg("optimize.cfg"), "--set", "q_2d=1000"]);
    assert_eq!(data_rows(&data).len(), 1);
    let (data, stderr) = ok(&[
        "optimize",
        &cfg("optimize.cfg"),
        "--set",
        "d_min=10",
        "--set",
        "d_max=20",
    ]);
    assert!(stderr.contains("warning:"));
    assert!(data.contains("# warning:"));
    assert!(data_rows(&data)
        .iter()
        .all(|r| r[3] == "true" && r[1].parse::<f64>().unwrap() == 10.0));
}

fn write_measurements(path: &Path, alpha: f64) {
    let mut text = String::from("diameter_um,q,series\n");
    for (label, q2d) in [("high", 5000.0), ("low", 1000.0)] {
        for d in [0.5, 0.8, 1.1, 1.5, 2.0, 2.6, 3.3, 4.0] {
            let m = solve_fundamental_mode(&PillarGeometry::new(d, 3.5, 1.0, 950.0).unwrap()).unwrap();
            let q = 1.0 / (1.0 / q2d + alpha * m.sidewall_intensity);
            text.push_str(&format!("{d},{q:.17e},{label}\n"));
        }
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_round_trip_and_shared_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    write_measurements(&csv, 4.2e-3);
    let csv_set = format!("measurements={}", csv.display());
    let (_, summary) = ok(&["fit", &cfg("fit.cfg"), "--set", &csv_set]);
    let alpha = value_after(&summary, "alpha = ");
    assert!((alpha / 4.2e-3 - 1.0).abs() < 1e-3);
    assert_eq!(summary.matches("alpha").count(), 1);

    let (data, summary) = ok(&[
        "fit",
        &cfg("fit.cfg"),
        "--set",
        &csv_set,
        "--set",
        "fit_per_series=true",
    ]);
    assert!(summary.contains("alpha[high]") && summary.contains("alpha[low]"));
    assert_eq!(data_rows(&data).len(), 2 * 60);
}

#[test]
fn fit_rejects_unknown_series() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    std::fs::write(&csv, "diameter_um,q,series\n1.0,800,high\n1.5,900,medium\n").unwrap();
    let o = cli(&[
        "fit",
        &cfg("fit.cfg"),
        "--set",
        &format!("measurements={}", csv.display()),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("q.csv:3:") && err.contains("medium"), "{err}");
}

#[test]
fn sweep_with_fitted_alpha() {
    let (data, _) = ok(&["sweep", &cfg("fit.cfg"), "--set", "alpha=fit", "--set", "q_2d=2000"]);
    assert!(data.contains("# alpha_fitted_um2 = "));
}

#[test]
fn mc_worked_budget_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let (summary, _) = ok(&["mc", &cfg("mc_worked.cfg"), "--out", &a.display().to_string()]);
    ok(&["mc", &cfg("mc_worked.cfg"), "--out", &b.display().to_string()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let eta = value_after(&summary, "eta_hat = ");
    let se = value_after(&summary, "+- ");
    assert!((eta - 0.63).abs() < 3.0 * se);

    let (data, _) = ok(&["mc", &cfg("mc_worked.cfg"), "--set", "n_photons=1", "--seed", "5"]);
    let total: u64 = data_rows(&data).iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 1);
    assert!(data.contains("# seed = 5"));
}

#[test]
fn mc_design_point_includes_bottom_loss() {
    let (data, _) = ok(&["mc", &cfg("mc_design.cfg"), "--set", "n_photons=200000"]);
    let rows = data_rows(&data);
    let bottom: u64 = rows.iter().find(|r| r[0] == "lost_bottom").unwrap()[1].parse().unwrap();
    assert!(bottom > 0);
}

#[test]
fn every_command_is_reproducible() {
    for args in [
        vec!["dbr", "dbr_top9.cfg"],
        vec!["cavity-q", "cavity_q_low.cfg"],
        vec!["mode", "mode.cfg"],
        vec!["fit", "fit.cfg"],
        vec!["sweep", "high_q_sweep.cfg"],
        vec!["optimize", "optimize.cfg"],
        vec!["mc", "mc_design.cfg"],
    ] {
        let path = cfg(args[1]);
        let run = || ok(&[args[0], "--config", &path, "--set", "n_photons=10000"]).0;
        let first = run();
        assert!(first.starts_with("# micropillar "), "{args:?}");
        assert!(first.contains("# config_sha256 = "));
        assert_eq!(first, run(), "{args:?}");
    }
}

#[test]
fn bad_invocations_fail() {
    assert!(!cli(&["sweep", "/nonexistent.cfg"]).status.success());
    assert!(!cli(&["mode", "--set", "gamma"]).status.success());
    assert!(!cli(&["mode", "--set", "colour=blue"]).status.success());
    assert!(!cli(&["frobnicate"]).status.success());
}
