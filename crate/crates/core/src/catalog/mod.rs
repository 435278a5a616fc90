//! The catalog surfaces as Weierstrass data: plane, catenoid, helicoid and the Riemann examples.

mod riemann;

pub use riemann::{make_riemann, riemann_cylinder, RiemannBranch, RiemannExampleParams, RiemannGauss};

use crate::complexkit::{exp_linear, polynomial, AnalyticFn, Contour, Jet, Singularity, C64};
use crate::error::{Result, WlabError};
use crate::weierstrass::{
    flux, homothety, rotate, Chart, ChartPath, ChartPoint, DeclaredEnd, EndKind, WeierstrassData,
};
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// (g, dh) = (1, dz) on ℂ.
pub fn make_plane() -> WeierstrassData {
    WeierstrassData {
        name: "plane".into(),
        g: AnalyticFn::constant(c(1.0, 0.0)),
        phi: AnalyticFn::constant(c(1.0, 0.0)),
        chart: Chart::Plane,
        base_point: ChartPoint::new(c(0.0, 0.0)),
        base_position: [0.0; 3],
        ends: vec![DeclaredEnd { location: None, kind: EndKind::Planar, g_order: 0 }],
    }
}

/// (g, dh) = (z, dz/z) on ℂ∖{0}; axis x₃, waist circle |z| = 1 at height 0.
pub fn make_catenoid() -> WeierstrassData {
    let origin = Singularity { location: c(0.0, 0.0), order: 1 };
    WeierstrassData {
        name: "catenoid".into(),
        g: polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        phi: polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]).recip().with_singularities(vec![origin]),
        chart: Chart::PuncturedPlane,
        base_point: ChartPoint::new(c(1.0, 0.0)),
        base_position: [-1.0, 0.0, 0.0],
        ends: vec![
            DeclaredEnd { location: Some(c(0.0, 0.0)), kind: EndKind::Catenoidal, g_order: 1 },
            DeclaredEnd { location: None, kind: EndKind::Catenoidal, g_order: -1 },
        ],
    }
}

/// (g, dh) = (e^z, i dz) on ℂ.
pub fn make_helicoid() -> WeierstrassData {
    WeierstrassData {
        name: "helicoid".into(),
        g: exp_linear(c(1.0, 0.0)),
        phi: AnalyticFn::constant(c(0.0, 1.0)),
        chart: Chart::Plane,
        base_point: ChartPoint::new(c(0.0, 0.0)),
        base_position: [0.0; 3],
        ends: vec![DeclaredEnd { location: None, kind: EndKind::Helicoidal, g_order: 0 }],
    }
}

/// Catenoid on its universal cover, (e^z, dz): horizontal sections are the vertical lines Re z = const.
pub fn make_catenoid_cover() -> WeierstrassData {
    WeierstrassData {
        name: "catenoid-cover".into(),
        g: exp_linear(c(1.0, 0.0)),
        phi: AnalyticFn::constant(c(1.0, 0.0)),
        chart: Chart::Plane,
        base_point: ChartPoint::new(c(0.0, 0.0)),
        base_position: [0.0; 3],
        ends: vec![DeclaredEnd { location: None, kind: EndKind::Catenoidal, g_order: 0 }],
    }
}

/// Helicoid with dh = dz, (e^{−iz}, dz): horizontal sections are straight lines.
pub fn make_helicoid_levels() -> WeierstrassData {
    WeierstrassData {
        name: "helicoid-levels".into(),
        g: exp_linear(c(0.0, -1.0)),
        phi: AnalyticFn::constant(c(1.0, 0.0)),
        chart: Chart::Plane,
        base_point: ChartPoint::new(c(0.0, 0.0)),
        base_position: [0.0; 3],
        ends: vec![DeclaredEnd { location: None, kind: EndKind::Helicoidal, g_order: 0 }],
    }
}

/// Non-circular test datum g = exp(2πz + ε sin(2πiz)), dh = dz, on the cylinder ℂ/⟨i⟩.
pub fn make_perturbed(eps: f64) -> WeierstrassData {
    let k = c(0.0, 2.0 * PI);
    let q = move |z: C64| 2.0 * PI * z + eps * (k * z).sin();
    let g = AnalyticFn::new(move |z| q(z).exp()).with_taylor(move |z0, n| {
        // Taylor jet of 2πz + ε sin(kz), then exponentiate
        let mut qc = Vec::with_capacity(n + 1);
        let mut kp = c(1.0, 0.0);
        let mut fact = 1.0;
        for j in 0..=n {
            if j > 0 {
                kp *= k;
                fact *= j as f64;
            }
            let phase = (k * z0 + c(0.5 * PI * j as f64, 0.0)).sin();
            qc.push(eps * kp * phase / fact);
        }
        qc[0] += 2.0 * PI * z0;
        if n >= 1 {
            qc[1] += 2.0 * PI;
        }
        Jet::new(qc).exp().c
    });
    WeierstrassData {
        name: format!("perturbed:eps={eps}"),
        g,
        phi: AnalyticFn::constant(c(1.0, 0.0)),
        chart: Chart::Cylinder { period: 1.0 },
        base_point: ChartPoint::new(c(0.0, 0.0)),
        base_position: [0.0; 3],
        ends: Vec::new(),
    }
}

/// Homothety and rotation about the x₃-axis bringing the flux along `section` to (h, 0, 1), h ≥ 0.
pub fn normalize_flux(data: &WeierstrassData, section: &ChartPath) -> Result<(WeierstrassData, f64, f64)> {
    let f = flux(data, section)?.f;
    if f[2].abs() < 1e-12 * (1.0 + f[0].hypot(f[1])) {
        return Err(WlabError::ZeroVerticalFlux);
    }
    let scale = 1.0 / f[2];
    let horiz = f[0].hypot(f[1]);
    let rotation = if horiz * scale.abs() < 1e-12 { 0.0 } else { -(f[1] * scale).atan2(f[0] * scale) };
    let mut out = data.clone();
    if scale != 1.0 {
        out = homothety(&out, scale);
    }
    if rotation != 0.0 {
        out = rotate(&out, rotation);
    }
    Ok((out, scale, rotation))
}

/// Unit circle about the origin, the compact section used for plane, catenoid and helicoid.
pub fn unit_section() -> ChartPath {
    ChartPath::single(Contour::circle(c(0.0, 0.0), 1.0, 64))
}

/// Catalog surface by CLI name: `plane`, `catenoid`, `helicoid`, `riemann:λ=<value>` (also `riemann:lambda=`).
pub fn from_name(name: &str) -> Result<(WeierstrassData, Option<RiemannExampleParams>)> {
    match name {
        "plane" => Ok((make_plane(), None)),
        "catenoid" => Ok((make_catenoid(), None)),
        "helicoid" => Ok((make_helicoid(), None)),
        "catenoid-cover" => Ok((make_catenoid_cover(), None)),
        "helicoid-levels" => Ok((make_helicoid_levels(), None)),
        _ => {
            if let Some(rest) = name.strip_prefix("riemann") {
                let v = rest
                    .trim_start_matches(':')
                    .trim_start_matches("λ=")
                    .trim_start_matches("lambda=");
                let lambda: f64 = if v.is_empty() {
                    1.0
                } else {
                    v.parse().map_err(|_| WlabError::Precondition(format!("bad λ in '{name}'")))?
                };
                let (d, p) = make_riemann(lambda)?;
                return Ok((d, Some(p)));
            }
            if let Some(rest) = name.strip_prefix("perturbed") {
                let v = rest.trim_start_matches(':').trim_start_matches("eps=");
                let eps: f64 = if v.is_empty() {
                    0.1
                } else {
                    v.parse().map_err(|_| WlabError::Precondition(format!("bad ε in '{name}'")))?
                };
                return Ok((make_perturbed(eps), None));
            }
            Err(WlabError::Precondition(format!("unknown surface '{name}'")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weierstrass::{metric_curvature, period_report};

    #[test]
    fn plane_is_flat() {
        let d = make_plane();
        for z in [c(0.3, 0.1), c(-2.0, 5.0)] {
            assert_eq!(metric_curvature(&d, ChartPoint::new(z)).unwrap().1, 0.0);
        }
    }

    #[test]
    fn catenoid_flux_is_vertical_two_pi() {
        let f = flux(&make_catenoid(), &unit_section()).unwrap().f;
        assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
        assert!((f[2] - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn helicoid_periods_vanish() {
        let d = make_helicoid();
        let c2 = ChartPath::single(Contour::circle(c(0.5, -0.3), 2.0, 48));
        assert!(period_report(&d, &[unit_section(), c2]).unwrap().residual < 1e-10);
    }

    #[test]
    fn catenoid_normalizes_to_unit_vertical_flux() {
        let (d, s, r) = normalize_flux(&make_catenoid(), &unit_section()).unwrap();
        assert!((s - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert_eq!(r, 0.0);
        let f = flux(&d, &unit_section()).unwrap().f;
        assert!((f[2] - 1.0).abs() < 1e-12 && f[0].abs() < 1e-12);
        let (_, s2, r2) = normalize_flux(&d, &unit_section()).unwrap();
        assert!((s2 - 1.0).abs() < 1e-12 && r2 == 0.0);
    }

    #[test]
    fn plane_has_no_vertical_flux() {
        assert!(matches!(normalize_flux(&make_plane(), &unit_section()), Err(WlabError::ZeroVerticalFlux)));
    }

    #[test]
    fn perturbed_jet_matches_finite_differences() {
        let d = make_perturbed(0.1);
        let z = c(0.13, 0.41);
        let j = d.g.jet(z, 3).unwrap();
        let h = 1e-5;
        let fd = (d.g.eval(z + h) - d.g.eval(z - h)) / (2.0 * h);
        assert!((j.deriv(1) - fd).norm() < 1e-6 * fd.norm());
        assert!((d.g.eval(z + c(0.0, 1.0)) - d.g.eval(z)).norm() < 1e-12 * d.g.eval(z).norm());
    }

    #[test]
    fn names_resolve() {
        assert!(from_name("catenoid").is_ok());
        assert!(from_name("torus").is_err());
    }
}
