use std::path::Path;
use std::process::{Command, Output};

fn wlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("WLAB_THREADS", "2")
        .output()
        .expect("run wlab")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn checks_pass(v: &serde_json::Value) -> bool {
    v["checks"].as_array().unwrap().iter().all(|c| c["pass"].as_bool().unwrap() && c["paper_anchor"].is_string())
}

#[test]
fn mesh_catenoid_writes_obj_ply_and_flux() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlab(&["mesh", "catenoid", "--set", "mesh.nx=16", "--set", "mesh.ny=9"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("catenoid.obj").exists());
    let ply = std::fs::read(dir.path().join("catenoid.ply")).unwrap();
    assert!(ply.starts_with(b"ply\nformat binary_little_endian 1.0\n"));
    let v = json(&dir.path().join("catenoid.json"));
    let f = v["payload"]["flux"].as_array().unwrap();
    assert!((f[2].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-8);
    assert!(checks_pass(&v));
}

#[test]
fn mesh_plane_is_flat_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = wlab(&["mesh", "plane", "--set", "mesh.nx=8", "--set", "mesh.ny=8"], d.path());
        assert!(o.status.success());
    }
    for f in ["plane.obj", "plane.ply", "plane.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert!(checks_pass(&json(&a.path().join("plane.json"))));
}

#[test]
fn mesh_riemann_reports_closed_periods() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlab(&["mesh", "riemann:λ=1", "--set", "mesh.nx=16", "--set", "mesh.ny=9"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("riemann_lambda_1.json"));
    assert!(v["payload"]["period_report"]["residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn kdv_hierarchy_prints_the_operators() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlab(&["kdv", "hierarchy", "--n", "3"], dir.path());
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().count(), 4);
    assert!(s.lines().last().unwrap().starts_with("P3 = "), "{s}");
}

#[test]
fn kdv_agtest_rational_is_deficient_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlab(&["kdv", "agtest", "--u", "rational"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("agtest-rational.json"));
    assert_eq!(v["payload"]["ag_rank"]["dependency"]["n"], 1);
}

#[test]
fn kdv_flow_logs_conservation() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlab(&["kdv", "flow", "--surface", "riemann:λ=1", "--T", "0.05", "--set", "flow.dump_lines=true"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("riemann_lambda_1-flow.json"));
    assert!(checks_pass(&v));
    let log = std::fs::read_to_string(dir.path().join("riemann_lambda_1-flow.csv")).unwrap();
    assert!(log.starts_with("t,dt,"));
    let drift: f64 = log.lines().skip(1).map(|l| l.split(',').nth(6).unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(drift < 1e-5);
    let dump = std::fs::read(dir.path().join("riemann_lambda_1-g.bin")).unwrap();
    assert_eq!(dump.len(), 8 + 8 * 64);
}

#[test]
fn diagnose_catenoid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlab(&["diagnose", "catenoid"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("catenoid-diagnose.json"));
    assert!(checks_pass(&v));
    assert_eq!(v["payload"]["jorge_meeks"]["lhs_minus_rhs"], 0);
}

#[test]
fn fit_end_of_riemann_middle_end_is_planar() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlab(&["fit-end", "riemann:λ=1", "--end", "0", "--set", "end.expected_a=0.0"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&dir.path().join("riemann_lambda_1-end0.json"))["payload"]["fit"]["a"].as_f64().unwrap().abs() < 1e-3);
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(wlab(&["mesh", "torus"], dir.path()).status.code(), Some(2));
    // a check that cannot pass
    let o = wlab(&["kdv", "soliton", "--set", "tolerances.soliton_shape=1e-300"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    // output directory under a regular file
    let file = dir.path().join("blocker");
    std::fs::write(&file, b"x").unwrap();
    let o = wlab(&["kdv", "hierarchy"], &file.join("sub"));
    assert_eq!(o.status.code(), Some(3));
}
