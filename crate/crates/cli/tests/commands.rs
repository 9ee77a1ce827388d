use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use btspec_cli::commands::{FieldReport, SignalReport, SweepReport};
use btspec_cli::{load, RunConfig};

fn btspec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btspec"))
        .args(args)
        .env_remove("BTSPEC_OUT_DIR")
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn sphere_sweep_reports_branch_points() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "geometry = sphere\nN = 150\ng_max = 25\n");
    let out = btspec(tmp.path(), &["sweep", "-c", &cfg, "-o", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("res/branchpoints.json")).unwrap();
    let report: SweepReport = serde_json::from_str(&text).unwrap();
    let again: SweepReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(report, again);
    for (g, tol, order) in [(5.622, 0.01, 2), (12.0, 0.15, 4), (20.1, 0.1, 4), (23.84, 0.05, 2)] {
        assert!(
            report.points.iter().any(|p| (p.g_star - g).abs() < tol && p.order == order),
            "{g}: {:?}",
            report.points.iter().map(|p| p.g_star).collect::<Vec<_>>()
        );
    }
    let first = report.points.iter().find(|p| (p.g_star - 5.622).abs() < 0.01).unwrap();
    assert_eq!(first.branches, vec![1, 2]);
    assert_eq!(first.modes, vec!["000".to_string(), "100".to_string()]);
    let csv = fs::read_to_string(tmp.path().join("res/branches.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("g,branch_j,re_lambda,im_lambda,flags"));
    assert_eq!(lines.count(), 17 * report.grid_points);
    let expected = load(Some(Path::new(&cfg)), &["out_dir=res".to_string()]).unwrap();
    assert_eq!(report.config, expected);
}

#[test]
fn axial_cylinder_sweep_finds_interval_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = btspec(
        tmp.path(),
        &["sweep", "-s", "geometry=cylinder", "-s", "eta_deg=90", "-s", "N=60", "-s", "g_max=19", "-s", "branches=8"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: SweepReport =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("btspec-out/branchpoints.json")).unwrap()).unwrap();
    let first = report.points.first().expect("a branch point");
    assert!((first.g_star - 18.06).abs() < 0.01, "{}", first.g_star);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert_eq!(btspec(p, &["sweep", "-s", "g_max=0"]).status.code(), Some(2));
    assert_eq!(btspec(p, &["signal", "-s", "g_bar=2"]).status.code(), Some(2));
    assert_eq!(btspec(p, &["signal", "-s", "g_bar=2", "-s", "t_bars="]).status.code(), Some(2));
    assert_eq!(btspec(p, &["sweep", "-s", "colour=blue"]).status.code(), Some(2));
    assert_eq!(btspec(p, &["sweep", "-s", "N=40"]).status.code(), Some(2));
    assert_eq!(btspec(p, &["sweep", "--bogus"]).status.code(), Some(2));
    let cfg = write_config(p, "R_um = 10\nG_mT_per_m = 17\ng_bar = 2\n");
    assert_eq!(btspec(p, &["signal", "-c", &cfg]).status.code(), Some(2));
}

#[test]
fn branch_beyond_basis_is_a_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = btspec(tmp.path(), &["fieldmap", "-s", "N=30", "-j", "1000", "-g", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

fn signal_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn signal_in_physical_units() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "geometry = sphere\nR_um = 10\nG_mT_per_m = 17\ndeltas_ms = 5, 10, 20\nN = 100\nwalkers = 2000\nseed = 5\n",
    );
    let out = btspec(tmp.path(), &["signal", "-c", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = signal_rows(&tmp.path().join("btspec-out/signal.csv"));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.len(), 11);
        // one-mode present, two-mode absent, MC filled in
        assert!(!r[5].is_empty() && r[6].is_empty() && r[7].is_empty() && !r[8].is_empty());
        let (m, s): (f64, f64) = (r[1].parse().unwrap(), r[3].parse().unwrap());
        assert!((m - s).abs() < 1e-9 && m > 0.0 && m < 1.0);
    }
    let report: SignalReport =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("btspec-out/signal.json")).unwrap()).unwrap();
    assert!((report.g_bar - 1.977).abs() < 1e-3);
    assert!(report.c12.is_none() && report.lambda1.unwrap().im == 0.0);
    assert!((report.sum_c.re - 1.0).abs() < 1e-9);

    let first = fs::read(tmp.path().join("btspec-out/signal.csv")).unwrap();
    assert!(btspec(tmp.path(), &["signal", "-c", &cfg]).status.success());
    assert_eq!(first, fs::read(tmp.path().join("btspec-out/signal.csv")).unwrap());
}

#[test]
fn signal_past_first_branch_point_uses_two_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = btspec(tmp.path(), &["signal", "-s", "g_bar=15", "-s", "t_bars=0.5,1", "-s", "N=100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for r in signal_rows(&tmp.path().join("btspec-out/signal.csv")) {
        assert!(r[5].is_empty() && !r[6].is_empty() && r[8].is_empty());
        let (m, two): (f64, f64) = (r[1].parse().unwrap(), r[6].parse().unwrap());
        assert!((two - m).abs() / m < 0.05);
    }
}

#[test]
fn fieldmap_past_first_branch_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = btspec(tmp.path(), &["fieldmap", "-s", "N=100", "-j", "1", "-g", "5.63", "-r", "21"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("btspec-out");
    let report: FieldReport = serde_json::from_str(&fs::read_to_string(dir.join("field_j1_g5.63.json")).unwrap()).unwrap();
    assert!(report.eigenvalue.im.abs() > 1e-3, "{}", report.eigenvalue);
    let csv = fs::read_to_string(dir.join("field_j1_g5.63.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,z,re_v,im_v,inside_flag"));
    assert_eq!(csv.lines().count(), 1 + 21 * 21);
    // the box corners lie outside the ball
    assert!(csv.lines().nth(1).unwrap().ends_with(",,,0"));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["signal", "-s", "g_bar=1", "-s", "t_bars=0.1", "-s", "N=20"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_btspec"))
            .args(&args)
            .env("BTSPEC_OUT_DIR", "from-env")
            .current_dir(tmp.path())
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(tmp.path().join("from-env/signal.csv").exists());
    assert!(run(&["-o", "from-flag"]).status.success());
    assert!(tmp.path().join("from-flag/signal.csv").exists());
}

#[test]
fn config_round_trips_through_json() {
    let cfg = RunConfig { r_um: Some(5.0), h_um: Some(7.5), eta_deg: 78.3, ..Default::default() };
    let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert!((back.aspect_ratio() - 1.5).abs() < 1e-15);
}
