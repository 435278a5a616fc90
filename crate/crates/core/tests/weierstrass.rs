use std::f64::consts::PI;
use wlab_core::catalog::{
    make_catenoid, make_catenoid_cover, make_helicoid, make_plane, make_riemann, normalize_flux, unit_section,
};
use wlab_core::complexkit::{ChartGrid, Contour};
use wlab_core::weierstrass::{
    associate, ball_area_profile, fit_end, flux, immerse, jorge_meeks_check, lopez_ros, mesh_polar, mesh_rect,
    metric_curvature, period_report, position, superharmonic_check, total_curvature, ChartPath, ChartPoint,
};
use wlab_core::{WlabError, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn plane_immersion_is_isometric() {
    let d = make_plane();
    let z = c(0.7, -1.3);
    let x = position(&d, ChartPoint::new(z)).unwrap();
    assert!((x[0]).abs() < 1e-12 && (x[1] + z.im).abs() < 1e-12 && (x[2] - z.re).abs() < 1e-12);
    assert_eq!(position(&d, ChartPoint::new(c(0.0, 0.0))).unwrap(), [0.0; 3]);
}

#[test]
fn catenoid_waist_is_unit_circle() {
    let d = make_catenoid();
    for t in [0.3, 1.9, 3.5, 5.0] {
        let x = position(&d, ChartPoint::new(C64::from_polar(1.0, t))).unwrap();
        assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-10 && x[2].abs() < 1e-12);
    }
    let (lam, k, _) = metric_curvature(&d, ChartPoint::new(C64::from_polar(1.0, 0.4))).unwrap();
    assert!((lam - 1.0).abs() < 1e-12 && (k + 1.0).abs() < 1e-12);
}

#[test]
fn helicoid_axis_curvature() {
    let (lam, k, _) = metric_curvature(&make_helicoid(), ChartPoint::new(c(0.0, 0.0))).unwrap();
    assert!((lam - 1.0).abs() < 1e-14 && (k + 1.0).abs() < 1e-14);
}

#[test]
fn path_independence() {
    let d = make_catenoid();
    let t = c(1.5, 1.2);
    let p1 = ChartPath::single(Contour::through(&[c(1.0, 0.0), c(2.0, 0.0), t]));
    let p2 = ChartPath::single(Contour::through(&[c(1.0, 0.0), c(0.6, 0.9), t]));
    let (a, b) = (immerse(&d, &p1).unwrap(), immerse(&d, &p2).unwrap());
    let l = p1.length().max(p2.length());
    assert!((0..3).all(|k| (a[k] - b[k]).abs() < 1e-8 * l));
}

#[test]
fn flux_homotopy_invariance() {
    let d = make_catenoid();
    let f1 = flux(&d, &unit_section()).unwrap().f;
    let f2 = flux(&d, &ChartPath::single(Contour::circle(c(0.0, 0.0), 2.0, 64))).unwrap().f;
    assert!((0..3).all(|k| (f1[k] - f2[k]).abs() < 1e-8));
}

#[test]
fn catenoid_total_curvature() {
    let mesh = mesh_polar(&make_catenoid(), (-5.0, 5.0), 81, 96, &[1]).unwrap();
    let tc = total_curvature(&mesh);
    assert!((tc + 4.0 * PI).abs() < 0.01 * 4.0 * PI, "{tc}");
    let small = total_curvature(&mesh_polar(&make_catenoid(), (-1.0, 1.0), 41, 96, &[1]).unwrap());
    assert!(tc < small);
}

#[test]
fn plane_total_curvature_zero() {
    let mesh = mesh_rect(&make_plane(), (-1.0, 1.0), (-1.0, 1.0), 9, 9).unwrap();
    assert_eq!(total_curvature(&mesh), 0.0);
}

#[test]
fn lopez_ros_catenoid_stays_closed() {
    let d = lopez_ros(&make_catenoid(), 2.0).unwrap();
    let r = period_report(&d, &[unit_section()]).unwrap();
    assert!(r.residual < 1e-8);
    let f0 = flux(&make_catenoid(), &unit_section()).unwrap().f[2];
    let f1 = flux(&d, &unit_section()).unwrap().f[2];
    assert_eq!(f0.to_bits(), f1.to_bits());
}

#[test]
fn lopez_ros_riemann_opens_periods() {
    let (d, p) = make_riemann(1.0).unwrap();
    let r = period_report(&lopez_ros(&d, 2.0).unwrap(), std::slice::from_ref(&p.alpha)).unwrap();
    assert!(r.residual > 1e-2, "{}", r.residual);
}

#[test]
fn associate_preserves_metric() {
    let d = make_catenoid_cover();
    let h = associate(&d, PI / 2.0);
    for z in [c(0.2, 0.3), c(-1.0, 2.0)] {
        let (l0, k0, _) = metric_curvature(&d, ChartPoint::new(z)).unwrap();
        let (l1, k1, _) = metric_curvature(&h, ChartPoint::new(z)).unwrap();
        assert!((l0 - l1).abs() < 1e-12 && (k0 - k1).abs() < 1e-12);
    }
    assert!((h.phi.eval(c(0.0, 0.0)) - c(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn catenoid_end_fit() {
    let d = make_catenoid();
    let fit = fit_end(&d, &d.ends[1], 32.0, 2).unwrap();
    assert!((fit.a - 1.0).abs() < 1e-3, "{fit:?}");
    assert!((fit.b - 2f64.ln()).abs() < 1e-2, "{fit:?}");
}

#[test]
fn jorge_meeks() {
    let jm = jorge_meeks_check(&make_catenoid(), 0, 2).unwrap();
    assert_eq!((jm.deg, jm.lhs_minus_rhs), (1, 0));
    let (d, _) = make_riemann(1.0).unwrap();
    let jm = jorge_meeks_check(&d, 1, 2).unwrap();
    assert_eq!((jm.deg, jm.lhs_minus_rhs), (2, 0));
    assert!(matches!(jorge_meeks_check(&make_plane(), 0, 1), Err(WlabError::NotApplicable(_))));
}

#[test]
fn riemann_quotient() {
    for lam in [0.5, 1.0, 2.0] {
        let (d, p) = make_riemann(lam).unwrap();
        let mesh = mesh_polar(&d, (-6.0, 6.0), 97, 64, &[1, -1]).unwrap();
        let tc = total_curvature(&mesh);
        assert!((tc + 8.0 * PI).abs() < 0.02 * 8.0 * PI, "λ={lam}: {tc}");
        let (n, _, _) = normalize_flux(&d, &p.alpha).unwrap();
        let f = flux(&n, &p.alpha).unwrap().f;
        assert!(f[0] > 0.0 && f[1].abs() < 1e-10 && (f[2] - 1.0).abs() < 1e-10, "{f:?}");
    }
}

#[test]
fn riemann_middle_end_is_planar() {
    let (d, _) = make_riemann(1.0).unwrap();
    let fit = fit_end(&d, &d.ends[0], 8.0, 3).unwrap();
    assert!(fit.a.abs() < 1e-3, "{fit:?}");
}

#[test]
fn monotonicity_on_catenoid() {
    let mesh = mesh_polar(&make_catenoid(), (-4.0, 4.0), 161, 128, &[1]).unwrap();
    let radii: Vec<f64> = (0..12).map(|k| 1.5 + 0.5 * k as f64).collect();
    let prof = ball_area_profile(&mesh, [0.0; 3], &radii);
    assert!(prof.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-6), "{prof:?}");
    assert!(prof.iter().all(|p| p.1 >= PI - 0.01));
}

#[test]
fn plane_ball_profile_is_pi() {
    let mesh = mesh_rect(&make_plane(), (-3.0, 3.0), (-3.0, 3.0), 241, 241).unwrap();
    let prof = ball_area_profile(&mesh, [0.0; 3], &[1.0, 2.0]);
    assert!(prof.iter().all(|p| (p.1 - PI).abs() < 0.02), "{prof:?}");
}

#[test]
fn superharmonic_catalog() {
    let cat = superharmonic_check(&make_catenoid(), &ChartGrid::spanning(1.2, 2.4, -0.6, 0.6, 81, 81)).unwrap();
    assert!(cat.violation < 1e-6, "{cat:?}");
    let hel = superharmonic_check(&make_helicoid(), &ChartGrid::spanning(1.0, 2.0, -1.0, 0.0, 81, 81)).unwrap();
    assert!(hel.violation < 1e-6, "{hel:?}");
}
