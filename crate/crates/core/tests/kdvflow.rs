use std::f64::consts::PI;
use wlab_core::catalog::{make_catenoid, make_catenoid_cover, make_helicoid_levels, make_perturbed, make_riemann, riemann_cylinder};
use wlab_core::complexkit::SampledLine;
use wlab_core::kdvflow::*;
use wlab_core::shiffman::rechart_log;
use wlab_core::{WeierstrassData, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn vline(x0: f64, n: usize, period: f64) -> SampledLine {
    SampledLine::vertical(x0, n, period, |_| c(0.0, 0.0))
}

fn riemann(lam: f64) -> (WeierstrassData, f64, C64) {
    let (_, p) = make_riemann(lam).unwrap();
    let (d, _) = riemann_cylinder(&p).unwrap();
    let kappa = c(0.0, -(1.0 - lam * lam) / 4.0) / (p.a * p.a);
    (d, p.omega, kappa)
}

fn catalog_lines() -> Vec<(String, WeierstrassData, SampledLine)> {
    let mut out = vec![
        ("catenoid".to_string(), rechart_log(&make_catenoid()).unwrap(), vline(0.4, 64, 2.0 * PI)),
        ("catenoid-cover".to_string(), make_catenoid_cover(), vline(-0.3, 64, 2.0 * PI)),
        (
            "helicoid-levels".to_string(),
            make_helicoid_levels(),
            SampledLine::horizontal(0.2, 0.0, 64, 2.0 * PI, |_| c(0.0, 0.0)),
        ),
        ("perturbed".to_string(), make_perturbed(0.1), vline(0.1, 128, 1.0)),
    ];
    for lam in [0.5, 1.0, 2.0] {
        let (d, omega, _) = riemann(lam);
        out.push((format!("riemann {lam}"), d, vline(0.25 * omega, 64, 1.0)));
    }
    out
}

#[test]
fn u_of_exponentials_is_constant() {
    let d = rechart_log(&make_catenoid()).unwrap();
    let u = u_from_g(&d, &vline(0.4, 32, 2.0 * PI)).unwrap();
    assert!(u.values.iter().all(|v| (v + 0.25).norm() < 1e-12));
    let u = u_from_g(&make_helicoid_levels(), &vline(0.4, 32, 2.0 * PI)).unwrap();
    assert!(u.values.iter().all(|v| (v - 0.25).norm() < 1e-12));
}

#[test]
fn u_has_double_poles_with_coefficient_minus_two_at_zeros_of_g() {
    for lam in [0.5, 2.0] {
        let (d, _, _) = riemann(lam);
        let f = |z: C64| u_at(&d, z);
        let (z, c2) = locate_pole(&f, c(0.01, 0.02), 0.1, 0.0).unwrap();
        assert!(z.norm() < 1e-8, "{z}");
        assert!((c2 + 2.0).norm() < 1e-3, "{c2}");
    }
}

#[test]
fn miura_and_schrodinger_on_catalog_lines() {
    for (name, d, line) in catalog_lines() {
        let m = miura_consistency(&d, &line).unwrap();
        let s = schrodinger_check(&d, &line).unwrap();
        assert!(m < 1e-8, "{name}: miura {m:e}");
        assert!(s.residual < 1e-6, "{name}: schrödinger {:e}", s.residual);
    }
}

#[test]
fn odd_winding_engages_the_antiperiodic_branch() {
    // g = e^{2πiz} along a horizontal line: y = e^{−πiz}, u = π²
    let line = SampledLine::horizontal(0.1, 0.0, 32, 1.0, |z| (c(0.0, 2.0 * PI) * z).exp());
    let (y, w) = y_from_g_line(&line).unwrap();
    assert_eq!(w, 1);
    let ypp = wlab_core::complexkit::spectral_derivative(&y, 2).unwrap();
    let r = (0..32).map(|j| (ypp.values[j] + PI * PI * y.values[j]).norm()).fold(0.0, f64::max);
    assert!(r < 1e-8, "{r:e}");
    let s = schrodinger_check(&rechart_log(&make_catenoid()).unwrap(), &vline(0.4, 32, 2.0 * PI)).unwrap();
    assert!(s.branch_obstruction && s.winding == 1);
}

fn soliton(c0: f64, x0: f64, len: f64, x: f64) -> f64 {
    // nearest periodic image
    let d = (x - x0 + 0.5 * len).rem_euclid(len) - 0.5 * len;
    0.5 * c0 / (0.5 * c0.sqrt() * d).cosh().powi(2)
}

#[test]
fn one_soliton_translates() {
    let (c0, len, t) = (16.0, 20.0, 0.05);
    let u0 = SampledLine::horizontal(0.0, 0.0, 512, len, |z| c(soliton(c0, 10.0, len, z.re), 0.0));
    let u = kdv_real_evolve(&u0, t, 1e-4).unwrap();
    let err = (0..512)
        .map(|j| (u.values[j].re - soliton(c0, 10.0 + c0 * t, len, u.point(j).re)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-4, "shape error {err:e}");
    let ((m0, e0), (m1, e1)) = (mass_and_energy(&u0), mass_and_energy(&u));
    assert!((m1 - m0).abs() / m0 < 1e-6 && (e1 - e0).abs() / e0 < 1e-6);
}

#[test]
fn zero_stays_zero() {
    let u0 = SampledLine::horizontal(0.0, 0.0, 64, 1.0, |_| c(0.0, 0.0));
    assert_eq!(kdv_real_evolve(&u0, 0.1, 1e-3).unwrap().max_abs(), 0.0);
}

#[test]
fn small_cosines_follow_airy_phases() {
    let eps = 1e-7;
    let u0 = SampledLine::horizontal(0.0, 0.0, 64, 1.0, |z| c(eps * (2.0 * PI * z.re).cos() + eps * (6.0 * PI * z.re).cos(), 0.0));
    let t = 0.01;
    let u = kdv_real_evolve(&u0, t, 1e-5).unwrap();
    let sp = u.spectrum();
    for m in [1i64, 3] {
        let k = 2.0 * PI * m as f64;
        let j = m as usize;
        let want = c(0.5 * eps, 0.0) * c(0.0, k * k * k * t).exp();
        assert!((sp[j] - want).norm() < 1e-6 * eps, "mode {m}: {} vs {want}", sp[j]);
    }
}

#[test]
fn hierarchy_flow_zero_is_translation() {
    // ∂u/∂t₀ = −u′, so the flow moves the data by τ along z
    let (d, omega, _) = riemann(0.5);
    let x0 = 0.25 * omega;
    let tau = 0.03;
    let u0 = u_from_g(&d, &vline(x0, 64, 1.0)).unwrap();
    let u = evolve_flow(&u0, 0, tau, 1e-3).unwrap();
    let want = u_from_g(&d, &vline(x0 - tau, 64, 1.0)).unwrap();
    let err = u.max_abs_diff(&want) / want.max_abs();
    assert!(err < 1e-7, "{err:e}");
}

#[test]
fn hierarchy_rhs_vanishes_for_the_degenerate_lame_potential() {
    let u = SampledLine::vertical(0.3, 64, 1.0, |z| degenerate_lame(z, c(0.0, 0.0)));
    assert!(hierarchy_rhs(&u, 1).unwrap().max_abs() < 1e-8 * hierarchy_rhs(&u, 0).unwrap().max_abs());
}

#[test]
fn ag_rank_of_exact_examples() {
    let u = SampledLine::vertical(0.3, 64, 1.0, |z| degenerate_lame(z, c(0.0, 0.0)));
    let r = algebro_geometric_rank(&u, 3).unwrap();
    let dep = r.dependency.unwrap();
    assert_eq!(dep.n, 1);
    assert!(dep.coefficients[0].norm() < 1e-6 && dep.residual < 1e-8, "{dep:?}");

    let k = SampledLine::vertical(0.3, 32, 1.0, |_| c(-0.7, 0.2));
    assert_eq!(algebro_geometric_rank(&k, 3).unwrap().rank, 0);

    for lam in [0.5, 2.0] {
        let (_, p) = make_riemann(lam).unwrap();
        let (d, _) = riemann_cylinder(&p).unwrap();
        let u = u_from_g(&d, &vline(0.25 * p.omega, 64, 1.0)).unwrap();
        let dep = algebro_geometric_rank(&u, 3).unwrap().dependency.expect("deficiency");
        // u = −2℘ + const, whose first flow is a multiple of the zeroth
        let want = -(1.0 - lam * lam) / (2.0 * (p.a * p.a).re);
        assert_eq!(dep.n, 1);
        assert!((dep.coefficients[0] - want).norm() < 1e-6 * want.abs(), "{dep:?} {want}");
    }
}

#[test]
fn pole_propagation_follows_explicit_families() {
    let z0 = c(0.05, 0.4);
    let times: Vec<f64> = (0..=10).map(|k| 0.005 * k as f64).collect();
    let stat = pole_propagation(&|_, z| Ok(degenerate_lame(z, z0)), &times, z0 + 0.02, 0.1).unwrap();
    assert!(stat.iter().all(|p| (p.z0 - z0).norm() < 1e-8 && (p.c_minus2 + 2.0).norm() < 1e-8));
    let v = c(0.3, -1.2);
    let moving = pole_propagation(&|t, z| Ok(degenerate_lame(z - v * t, z0)), &times, z0, 0.1).unwrap();
    for p in &moving {
        assert!((p.z0 - (z0 + v * p.t)).norm() < 1e-6, "{p:?}");
    }
}

#[test]
fn flow_rejects_bad_sample_counts() {
    let (d, omega, _) = riemann(0.5);
    assert!(FlowState::from_data(&d, 0.25 * omega, 96, &[]).is_err());
}

fn run_flow(lam: f64, t_end: f64) -> (FlowOutcome, WeierstrassData, f64, C64, Vec<PoleSeed>) {
    let (d, omega, kappa) = riemann(lam);
    let x0 = 0.25 * omega;
    let seeds = pole_seeds(&d, x0, omega);
    let st = FlowState::from_data(&d, x0, 64, &seeds).unwrap();
    let out = shiffman_evolve(st, t_end, 1e-4, &FlowOptions::default()).unwrap();
    (out, d, x0, kappa, seeds)
}

#[test]
fn shiffman_flow_on_riemann_data_is_the_predicted_translation() {
    for lam in [0.5, 1.0, 2.0] {
        let (out, d, x0, kappa, seeds) = run_flow(lam, 0.05);
        assert_eq!(seeds.len(), 2);
        let max = |f: &dyn Fn(&StepLog) -> f64| out.log.iter().map(f).fold(0.0, f64::max);
        assert!(max(&|l| l.period_drift) < 1e-5, "λ={lam}");
        assert!(max(&|l| l.route_discrepancy) < 1e-5, "λ={lam}");
        assert!(max(&|l| l.kernel[0].max(l.kernel[1])) < 1e-6, "λ={lam}");
        assert!(out.track.max_c2_deviation() < 0.05);
        assert!(out.track.spacing_drift(0, 1) < 1e-5);
        let f0 = out.log[0].flux;
        let f1 = out.log.last().unwrap().flux;
        assert!((0..3).all(|k| (f1[k] - f0[k]).abs() < 1e-5 * f0[k].abs().max(1.0)));
        for (s, track) in seeds.iter().zip(&out.track.poles) {
            let last = track.last().unwrap();
            assert!((last.z0 - (s.z - kappa * last.t)).norm() < 1e-6, "λ={lam}: {:?}", last);
        }
        let exact = SampledLine::vertical(x0, 64, 1.0, |z| d.g.eval(z + kappa * 0.05));
        assert!(out.state.g.max_abs_diff(&exact) < 1e-8 * exact.max_abs());
    }
}

#[test]
fn short_flow_routes_and_gauge_agree() {
    let (out, _, _, _, _) = run_flow(0.5, 0.01);
    for l in &out.log {
        assert!(l.route_discrepancy < 1e-6, "{l:?}");
        assert!(l.gauge_consistency < 1e-5, "{l:?}");
    }
    // the y-route keeps its anti-periodic sign flip structurally
    assert_eq!(out.state.y.unwrap().twist, c(0.0, PI));
}

#[test]
fn perturbed_flow_stays_consistent() {
    let d = make_perturbed(0.1);
    let st = FlowState::from_data(&d, 0.1, 128, &[]).unwrap();
    let out = shiffman_evolve(st, 0.002, 1e-4, &FlowOptions::default()).unwrap();
    let last = out.log.last().unwrap();
    assert!(last.route_discrepancy < 1e-6 && last.period_drift < 1e-6, "{last:?}");
}

#[test]
fn pole_seeds_are_zeros_of_g() {
    let (d, omega, _) = riemann(2.0);
    let seeds = pole_seeds(&d, 0.25 * omega, omega);
    assert!(seeds.iter().all(|s| d.g.eval(s.z).norm() < 1e-8));
    assert!((seeds[0].half_width - 0.25 * omega).abs() < 1e-12);
}
