use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortex-re")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn analyze(args: &[&str]) -> Value {
    let mut full = vec!["analyze"];
    full.extend_from_slice(args);
    let o = run(&full);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_ring_is_stable_with_run_config() {
    let v = analyze(&["--family", "ring", "--n", "4", "--theta0", "0.8"]);
    assert_eq!(v["verdict"], "LyapunovStable");
    assert_eq!(v["verdict_code"], "S");
    assert_eq!(v["agreement"], true);
    assert_eq!(v["run_config"]["seed"], 42);
    assert_eq!(v["run_config"]["command"], "analyze");
}

#[test]
fn analyze_ring_pole_pair() {
    let v = analyze(&["--family", "ring-pole", "--n", "2", "--theta0", "1.5708", "--kappa", "-1"]);
    assert_eq!(v["verdict"], "LyapunovStable");
    let v = analyze(&["--family", "ring-pole", "--n", "2", "--theta0", "1.5708", "--kappa", "1"]);
    assert_ne!(v["verdict"], "LyapunovStable");
}

#[test]
fn analyze_cube_reports_undetermined_kappa() {
    let v = analyze(&["--family", "two-rings", "--n", "4", "--theta0", "0.9553", "--theta1", "2.1863", "--aligned"]);
    assert_eq!(v["verdict"], "Degenerate");
    assert_eq!(v["kappa"], Value::Null);
    assert_eq!(v["kappa_status"], "near-degenerate");

    let c = (1.0f64 / 3f64.sqrt()).acos();
    let (t0, t1) = (c.to_string(), (std::f64::consts::PI - c).to_string());
    let v = analyze(&["--family", "two-rings", "--n", "4", "--theta0", &t0, "--theta1", &t1, "--aligned"]);
    assert_eq!(v["kappa_status"], "degenerate");

    // any prescribed kappa gives an equilibrium there; kappa = 1 has zero momentum and no reduced slice
    let v = analyze(&["--family", "two-rings", "--n", "4", "--theta0", &t0, "--theta1", &t1, "--aligned", "--kappa", "2"]);
    assert_eq!(v["kappa"], 2.0);
    assert_eq!(v["kappa_status"], "prescribed");
    assert!(v["verdict"].is_string());
    let o = run(&["analyze", "--family", "two-rings", "--n", "4", "--theta0", &t0, "--theta1", &t1, "--aligned", "--kappa", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn two_rings_solves_kappa() {
    let v = analyze(&["--family", "two-rings", "--n", "3", "--theta0", "0.7", "--theta1", "2.441592653589793", "--staggered"]);
    assert!((v["kappa"].as_f64().unwrap() + 1.0).abs() < 1e-10);
    assert!(v.get("kappa_status").is_none());
}

#[test]
fn degrees_are_rejected() {
    for a in ["45deg", "45", "90°"] {
        let o = run(&["analyze", "--family", "ring", "--n", "4", "--theta0", a]);
        assert_eq!(o.status.code(), Some(2), "{a}");
        assert!(stderr(&o).contains("radians"), "{}", stderr(&o));
    }
}

#[test]
fn invalid_parameters_exit_2() {
    for args in [
        vec!["analyze", "--family", "ring", "--n", "4"],
        vec!["analyze", "--family", "ring", "--n", "1", "--theta0", "0.8"],
        vec!["analyze", "--family", "ring-pole", "--n", "4", "--theta0", "0.8", "--kappa", "0"],
        vec!["analyze", "--family", "two-rings", "--n", "4", "--theta0", "0.8", "--theta1", "2.0"],
        vec!["analyze", "--family", "ring", "--n", "4", "--theta0", "0.8", "--tol-eig", "0"],
        vec!["scan", "--family", "ring", "--n", "4"],
        vec!["scan", "--family", "ring-pole", "--n", "4", "--svg"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# pole pair\nfamily=ring-pole\nn=2\ntheta0=1.5707963267948966\nkappa=1\n").unwrap();
    let v = analyze(&["--config", path_str(&cfg)]);
    assert_eq!(v["kappa"], 1.0);
    let v = analyze(&["--config", path_str(&cfg), "--kappa", "-1"]);
    assert_eq!(v["kappa"], -1.0);
    assert_eq!(v["verdict"], "LyapunovStable");
    assert_eq!(v["run_config"]["kappa"], -1.0);

    std::fs::write(&cfg, "family=ring\nn=4\ntheta0=0.8\ncolour=red\n").unwrap();
    let o = run(&["analyze", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));

    std::fs::write(&cfg, "family=ring\nn=4\ntheta0=30deg\n").unwrap();
    assert_eq!(run(&["analyze", "--config", path_str(&cfg)]).status.code(), Some(2));
}

#[test]
fn scan_csv_rows_svg_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let args = ["scan", "--family", "two-rings", "--n", "3", "--staggered", "--resolution", "12", "--out", path_str(&out), "--svg"];
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read(&out).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 12 * 12 + 1);
    assert_eq!(rows[0], "param1,param2,verdict,margin,kappa,xi,mu_z");
    assert!(text.lines().next().unwrap().starts_with("# run_config={"));
    assert!(text.contains("\"seed\":42"));
    let svg = std::fs::read_to_string(out.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<rect").count(), 12 * 12 + 1);

    let first_svg = svg;
    assert!(run(&args).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), first);
    assert_eq!(std::fs::read_to_string(out.with_extension("svg")).unwrap(), first_svg);
}

#[test]
fn default_ring_pole_scan_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rp.csv");
    let t = Instant::now();
    let o = run(&["scan", "--family", "ring-pole", "--n", "5", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(t.elapsed().as_secs_f64() < 60.0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 200 * 200 + 1);
}

fn summary_value(text: &str, key: &str) -> f64 {
    let i = text.find(key).unwrap_or_else(|| panic!("{key} missing in {text}")) + key.len();
    text[i..].split(|c: char| c == ',' || c.is_whitespace()).find(|s| !s.is_empty()).unwrap().parse().unwrap()
}

#[test]
fn simulate_ring_conserves() {
    let o = run(&["simulate", "--family", "ring", "--n", "5", "--theta0", "0.7853981633974483", "--T", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(summary_value(&s, "max relative H drift") < 1e-8, "{s}");
    assert!(summary_value(&s, "max Phi drift") < 1e-8, "{s}");
    assert!(summary_value(&s, "rigid-rotation deviation of the equilibrium") < 1e-6, "{s}");
}

#[test]
fn simulate_antipodal_pair_is_at_rest() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("pair.txt");
    let out = dir.path().join("traj.csv");
    std::fs::write(&state, "# x y z kappa\n0 0 1 1\n0 0 -1 1\n").unwrap();
    let o = run(&["simulate", "--state", path_str(&state), "--T", "3", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(&last[1..7], &[0.0, 0.0, 1.0, 0.0, 0.0, -1.0]);
}

#[test]
fn simulate_unstable_ring_grows() {
    let o = run(&["simulate", "--family", "ring", "--n", "7", "--theta0", "1.5707963267948966", "--perturb", "1e-6", "--growth", "--T", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("): positive; linear verdict LinearlyUnstable"), "{s}");
    assert!(summary_value(&s, "growth exponent") > 1.0);
}

#[test]
fn coincident_vortices_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("bad.txt");
    std::fs::write(&state, "1 0 0 1\n1 0 1e-13 -1\n").unwrap();
    let o = run(&["simulate", "--state", path_str(&state)]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn verify_is_deterministic_and_passes() {
    let a = run(&["verify", "--seed", "42"]);
    let b = run(&["verify", "--seed", "42"]);
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("checks passed (seed 42)"));
    assert!(!stdout(&a).contains("[FAIL]"));
}
