use wlab_core::catalog::{make_catenoid_cover, make_helicoid_levels, make_perturbed, make_riemann, riemann_cylinder};
use wlab_core::complexkit::{ChartGrid, Contour, SampledLine};
use wlab_core::shiffman::{
    derivative, f_of_h, f_of_h_on_grid, gdot, jacobi_residual, kernel_flux_check, montiel_ros, shiffman,
    shiffman_linear_offset, spread, support_function, tangent_check, FieldKind, HFunction, JacobiField,
};
use wlab_core::weierstrass::normal_from_g;
use wlab_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn line(x0: f64, n: usize) -> SampledLine {
    SampledLine::vertical(x0, n, 1.0, |_| c(0.0, 0.0))
}

#[test]
fn catalog_shiffman_vanishes() {
    assert!(shiffman(&make_catenoid_cover(), &line(0.3, 64)).unwrap().sup() < 1e-10);
    assert!(shiffman(&make_helicoid_levels(), &line(0.3, 64)).unwrap().sup() < 1e-10);
    for lam in [0.5, 1.0, 2.0] {
        let (_, p) = make_riemann(lam).unwrap();
        let (d, _) = riemann_cylinder(&p).unwrap();
        let s = shiffman(&d, &line(0.25 * p.omega, 64)).unwrap().sup();
        assert!(s < 1e-7, "λ={lam}: {s}");
    }
}

#[test]
fn perturbed_shiffman_detects_and_is_jacobi() {
    let d = make_perturbed(0.1);
    let coarse = shiffman(&d, &line(0.1, 64)).unwrap();
    assert!(coarse.sup() > 1e-2, "{}", coarse.sup());
    let fine = shiffman(&d, &line(0.1, 128)).unwrap();
    let (r1, r2) = (jacobi_residual(&d, &coarse).unwrap(), jacobi_residual(&d, &fine).unwrap());
    let rate = (r1 / r2).log2();
    assert!(rate > 1.8, "{r1} {r2} rate {rate}");
}

#[test]
fn complexified_shiffman_matches_real_part() {
    let d = make_perturbed(0.1);
    let (a, rms) = shiffman_linear_offset(&d, &line(0.1, 64)).unwrap();
    assert!(rms < 1e-8, "{a:?} {rms}");
}

#[test]
fn gdot_closed_forms() {
    let d = make_perturbed(0.1);
    let gp = derivative(&d.g);
    let one = gdot(&HFunction::one_over_g(), &d);
    let zero = gdot(&HFunction::c1_plus_c2_over_g2(c(0.3, -1.0), c(2.0, 0.5)), &d);
    let s = gdot(&HFunction::h_s(), &d);
    for z in [c(0.1, 0.2), c(-0.3, 0.77), c(0.45, 0.5)] {
        let j = d.g.jet(z, 3).unwrap();
        let (g, g1, g2, g3) = (j.c[0], j.c[1], 2.0 * j.c[2], 6.0 * j.c[3]);
        assert!((one.eval(z) + 0.5 * gp.eval(z)).norm() < 1e-8 * g1.norm());
        assert!(zero.eval(z).norm() < 1e-8 * g1.norm());
        let want = c(0.0, 0.5) * (g3 - 3.0 * g1 * g2 / g + 1.5 * g1 * g1 * g1 / (g * g));
        assert!((s.eval(z) - want).norm() < 1e-8 * want.norm(), "{} {}", s.eval(z), want);
    }
}

#[test]
fn f_of_h_closed_forms() {
    let d = make_perturbed(0.1);
    let l = line(0.2, 32);
    let f = f_of_h(&HFunction::one_over_g(), &d, &l).unwrap();
    let c2 = c(0.7, -0.4);
    let f2 = f_of_h(&HFunction::c1_plus_c2_over_g2(c(0.0, 0.0), c2), &d, &l).unwrap();
    for (k, z) in f.grid.sample(|z| z).into_iter().enumerate() {
        let g = d.g.eval(z);
        let m = g.norm_sqr();
        assert!((f.values[k] - (1.0 - m) / (1.0 + m)).norm() < 1e-8);
        assert!((f2.values[k] + 2.0 * c2 * g.conj() / (1.0 + m)).norm() < 1e-8);
    }
    let coarse = jacobi_residual(&d, &f_of_h(&HFunction::h_s(), &d, &line(0.2, 64)).unwrap().imag_part()).unwrap();
    let fine = jacobi_residual(&d, &f_of_h(&HFunction::h_s(), &d, &line(0.2, 128)).unwrap().imag_part()).unwrap();
    assert!(fine < coarse / 3.0, "{coarse} {fine}");
}

#[test]
fn riemann_shiffman_deformation_preserves_periods() {
    for lam in [0.5, 1.0, 2.0] {
        let (_, p) = make_riemann(lam).unwrap();
        let (d, _) = riemann_cylinder(&p).unwrap();
        let gs = gdot(&HFunction::h_s(), &d);
        let gamma = Contour::vertical_period(0.25 * p.omega, 0.0, 1.0, 64);
        let (a, b) = kernel_flux_check(&gs, &d, &gamma).unwrap();
        assert!(a.norm() < 1e-7 && b.norm() < 1e-7, "λ={lam}: {a} {b}");
        let (_, s) = kernel_flux_check(&d.g, &d, &gamma).unwrap();
        assert!(s.norm() > 1e-3, "{s}");
    }
}

#[test]
fn tangent_space_membership() {
    let (_, p) = make_riemann(1.0).unwrap();
    let (d, _) = riemann_cylinder(&p).unwrap();
    let rg = tangent_check(&d.g, &d).unwrap();
    assert!(rg.pass);
    assert!(rg.orders.iter().all(|o| o.order == o.g_order as i64));
    assert!(tangent_check(&derivative(&d.g), &d).unwrap().pass);
    // at λ = 1 the Shiffman deformation vanishes identically
    assert!(tangent_check(&gdot(&HFunction::h_s(), &d), &d).unwrap().orders.iter().all(|o| o.order == i64::MAX));
    let (_, p) = make_riemann(2.0).unwrap();
    let (d, _) = riemann_cylinder(&p).unwrap();
    let t = tangent_check(&gdot(&HFunction::h_s(), &d), &d).unwrap();
    assert!(t.pass && t.orders.iter().all(|o| o.order == if o.g_order > 0 { 1 } else { -3 }), "{t:?}");
}

#[test]
fn riemann_shiffman_deformation_is_a_translation() {
    // h_S = (i/2A²)(λ + (1 − λ²)/g − λ/g²) there, so ġ_S = −i(1 − λ²)/(4A²) g′
    for lam in [0.5, 2.0] {
        let (_, p) = make_riemann(lam).unwrap();
        let (d, _) = riemann_cylinder(&p).unwrap();
        let k = c(0.0, -(1.0 - lam * lam) / 4.0) / (p.a * p.a);
        let gs = gdot(&HFunction::h_s(), &d);
        let gp = derivative(&d.g);
        for z in [c(0.25 * p.omega, 0.1), c(0.2 * p.omega, 0.6)] {
            assert!((gs.eval(z) - k * gp.eval(z)).norm() < 1e-8 * gp.eval(z).norm(), "λ={lam}");
        }
    }
}

#[test]
fn montiel_ros_of_linear_fields() {
    let d = make_perturbed(0.1);
    let grid = ChartGrid::spanning(0.05, 0.25, 0.1, 0.3, 81, 81);
    let a = [0.3, -0.5, 0.8];
    let v = JacobiField::sample(FieldKind::Real, grid, |z| {
        let n = normal_from_g(d.g.eval(z));
        Ok(c(a[0] * n[0] + a[1] * n[1] + a[2] * n[2], 0.0))
    })
    .unwrap();
    let x = montiel_ros(&v, &d).unwrap();
    assert!(spread(&x) < 1e-6, "{}", spread(&x));
    let sup = support_function(&x, &d, &grid);
    assert!(sup.iter().zip(&v.values).all(|(s, v)| (s - v).norm() < 1e-6));
    // a non-linear field moves
    let fs = f_of_h_on_grid(&HFunction::h_s(), &d, grid).unwrap();
    let sp = spread(&montiel_ros(&fs, &d).unwrap());
    assert!(sp > 1e-3, "{sp} {}", fs.sup());
}

#[test]
fn montiel_ros_of_riemann_shiffman_is_constant() {
    let (_, p) = make_riemann(1.0).unwrap();
    let (d, _) = riemann_cylinder(&p).unwrap();
    let w = 0.25 * p.omega;
    let grid = ChartGrid::spanning(w - 0.1, w + 0.1, 0.1, 0.3, 41, 41);
    let s = wlab_core::shiffman::shiffman_on_grid(&d, grid).unwrap();
    assert!(spread(&montiel_ros(&s, &d).unwrap()) < 1e-5);
}
