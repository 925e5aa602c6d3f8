use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn hypbrw(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypbrw"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("HYPBRW_OUT")
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn green_writes_three_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypbrw(dir.path(), &["green", "--group", "free:2", "--walk", "srw", "--r", "1.0,1.05,1.1"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let raw = std::fs::read_to_string(dir.path().join("h_estimate.csv")).unwrap();
    assert!(raw.starts_with("r,H,H_error,log_H,heuristic\n"));
    assert!(!raw.contains('\r'));
    let rows = csv_rows(&dir.path().join("h_estimate.csv"));
    assert_eq!(rows.len(), 3);
    let h: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((h[0] - 1.0).abs() < 1e-9);
    assert!(h[0] < h[1] && h[1] < h[2]);
    // 17 significant digits
    assert_eq!(rows[1][1].split('e').next().unwrap().len(), 18);
    let series = std::fs::read_to_string(dir.path().join("green_series.csv")).unwrap();
    assert!(series.starts_with("r,n,H_n,ratio\n"));
    let rho = std::fs::read_to_string(dir.path().join("rho.csv")).unwrap();
    assert!(rho.starts_with("n,a_n,extrapolant\n"));
}

#[test]
fn green_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(hypbrw(d.path(), &["green", "--r", "1.0,1.1"]).status.success());
    }
    for f in ["rho.csv", "green_series.csv", "h_estimate.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(manifest(a.path())["files"], manifest(b.path())["files"]);
}

#[test]
fn weight_above_critical_is_a_regime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypbrw(dir.path(), &["green", "--r", "1.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("critical weight"), "{}", text(&o.stderr));
}

#[test]
fn brw_replays_and_reports_growth() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = hypbrw(d.path(), &["brw", "--quick", "--seed", "7", "--lambda", "1.1", "--replicas", "10"]);
        assert!(o.status.success(), "{}{}", text(&o.stdout), text(&o.stderr));
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["seed"], 7);
    assert_eq!(ma["results"]["growth"]["status"], "PASS");
    for (name, digest) in ma["files"].as_object().unwrap() {
        let bytes = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), digest.as_str().unwrap());
    }
    let moments = csv_rows(&a.path().join("brw_moments.csv"));
    assert!(moments.iter().any(|r| r[0] == "first" && r[1] == "e"));
    let trace = std::fs::read_to_string(a.path().join("brw_trace.csv")).unwrap();
    assert!(trace.starts_with("replica,n,population,M_n,min_speed,max_speed\n"));
}

#[test]
fn recurrent_mean_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypbrw(dir.path(), &["brw", "--lambda", "1.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("recurrent"));
}

#[test]
fn dimension_at_mean_one_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypbrw(dir.path(), &["dimension", "--quick", "--lambda", "1.0"]);
    assert!(o.status.success(), "{}{}", text(&o.stdout), text(&o.stderr));
    let rows = csv_rows(&dir.path().join("dimension_report.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
    assert!(rows[0][3].parse::<f64>().unwrap().abs() < 0.02);
    assert_eq!(rows[0][9], "PASS");
    assert!(csv_rows(&dir.path().join("cover_counts.csv")).len() >= 10);
}

#[test]
fn exponent_fit_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypbrw(dir.path(), &["exponent"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let rows = csv_rows(&dir.path().join("exponent_fit.csv"));
    let critical = rows.iter().find(|r| r[0] == "critical").unwrap();
    assert!((critical[1].parse::<f64>().unwrap() - 0.5).abs() <= 0.05);
    assert_eq!(critical[7], "PASS");
}

#[test]
fn pressure_agrees_with_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypbrw(dir.path(), &["pressure"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let rows = csv_rows(&dir.path().join("pressure_curve.csv"));
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[6] == "PASS"));
}

#[test]
fn quick_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let t = std::time::Instant::now();
    let o = hypbrw(dir.path(), &["verify", "--quick"]);
    assert!(o.status.success(), "{}", text(&o.stdout));
    assert!(t.elapsed().as_secs() < 60);
    assert!(!text(&o.stdout).contains("FAIL"));
}

#[test]
fn bad_tolerance_fails_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[verify.tolerances]\nspectral_radius = 1e-30\n").unwrap();
    let o = hypbrw(&dir.path().join("out"), &["verify", "--quick", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let out = text(&o.stdout);
    let line = out.lines().find(|l| l.contains("spectral_radius")).unwrap();
    assert!(line.starts_with("FAIL"), "{line}");
    assert!(text(&o.stderr).contains("spectral_radius"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "grop = \"free:2\"\n").unwrap();
    let o = hypbrw(dir.path(), &["green", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "[verify.tolerances]\nno_such_check = 1.0\n").unwrap();
    let o = hypbrw(dir.path(), &["verify", "--quick", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = hypbrw(dir.path(), &["green", "--group", "free:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "group = \"z2:3\"\n[walk]\nkind = \"lazy\"\np0 = 0.25\n[green]\nr = [1.0]\nn_max = 10\n").unwrap();
    let o = hypbrw(dir.path(), &["green", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(csv_rows(&dir.path().join("green_series.csv")).len(), 11);
    assert_eq!(manifest(dir.path())["config"]["group"], "z2:3");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_hypbrw"))
        .args(["green", "--r", "1.0"])
        .env("HYPBRW_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("manifest.json").exists());
}
