use super::{position, Chart, ChartPoint, DeclaredEnd, WeierstrassData};
use crate::complexkit::winding::{round_winding, winding_raw};
use crate::complexkit::{Contour, C64};
use crate::error::{Result, WlabError};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// x₃ ≈ a log r + b + (c₁x₁ + c₂x₂)/r² over the annulus R ≤ r ≤ 4R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndFit {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub rms: f64,
    pub r_inner: f64,
    pub samples: usize,
}

/// Least-squares end fit of sampled positions with horizontal radius in [R, 4R].
pub fn end_fit(samples: &[[f64; 3]], r_inner: f64) -> Result<EndFit> {
    let pts: Vec<[f64; 3]> = samples
        .iter()
        .copied()
        .filter(|p| {
            let r = p[0].hypot(p[1]);
            r >= r_inner && r <= 4.0 * r_inner
        })
        .collect();
    if pts.len() < 8 {
        return Err(WlabError::Precondition(format!("only {} samples in the fitting annulus", pts.len())));
    }
    check_graph(&pts, r_inner)?;
    let m = DMatrix::from_fn(pts.len(), 4, |i, j| {
        let p = pts[i];
        let r2 = p[0] * p[0] + p[1] * p[1];
        match j {
            0 => 0.5 * r2.ln(),
            1 => 1.0,
            2 => p[0] / r2,
            _ => p[1] / r2,
        }
    });
    let rhs = DVector::from_iterator(pts.len(), pts.iter().map(|p| p[2]));
    let sol = m
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| WlabError::NoConvergence(e.to_string()))?;
    let res = &m * &sol - rhs;
    let rms = (res.norm_squared() / pts.len() as f64).sqrt();
    Ok(EndFit { a: sol[0], b: sol[1], c1: sol[2], c2: sol[3], rms, r_inner, samples: pts.len() })
}

/// Bins of side 0.05R in the horizontal plane; a bin whose x₃ spread exceeds three bin widths holds two sheets.
fn check_graph(pts: &[[f64; 3]], r_inner: f64) -> Result<()> {
    let bin = 0.05 * r_inner;
    let mut spans: HashMap<(i64, i64), (f64, f64)> = HashMap::new();
    for p in pts {
        let key = ((p[0] / bin).floor() as i64, (p[1] / bin).floor() as i64);
        let e = spans.entry(key).or_insert((p[2], p[2]));
        e.0 = e.0.min(p[2]);
        e.1 = e.1.max(p[2]);
    }
    if spans.values().any(|(lo, hi)| hi - lo > 3.0 * bin) {
        return Err(WlabError::NotAGraph);
    }
    Ok(())
}

fn is_branch_end(data: &WeierstrassData, end: &DeclaredEnd) -> bool {
    matches!(data.chart, Chart::EllipticDoubleCover { .. }) && end.location.is_none_or(|p| p.norm() == 0.0)
}

/// Chart point at local parameter ρ e^{iψ} around an end (ρ → 0 approaches the end).
fn end_chart_point(data: &WeierstrassData, end: &DeclaredEnd, rho: f64, psi: f64) -> ChartPoint {
    if is_branch_end(data, end) {
        let psi = psi.rem_euclid(2.0 * PI);
        let sheet = if psi < PI { 1 } else { -1 };
        return match end.location {
            Some(p) => ChartPoint::on_sheet(p + C64::from_polar(rho * rho, 2.0 * psi), sheet),
            None => ChartPoint::on_sheet(C64::from_polar(1.0 / (rho * rho), 2.0 * psi + PI), sheet),
        };
    }
    match end.location {
        Some(p) => ChartPoint::new(p + C64::from_polar(rho, psi)),
        None => ChartPoint::new(C64::from_polar(1.0 / rho, psi)),
    }
}

fn local_radius_max(data: &WeierstrassData, end: &DeclaredEnd) -> f64 {
    let forbidden = data.forbidden_points();
    let branch = is_branch_end(data, end);
    let r = match end.location {
        Some(p) => {
            let d = forbidden
                .iter()
                .map(|q| (q - p).norm())
                .filter(|&d| d > 1e-9)
                .fold(f64::INFINITY, f64::min);
            if d.is_finite() {
                0.4 * d
            } else {
                1.0
            }
        }
        None => 0.4 / forbidden.iter().map(|q| q.norm()).fold(1.0, f64::max),
    };
    if branch {
        r.sqrt()
    } else {
        r
    }
}

fn horizontal_radius(data: &WeierstrassData, p: ChartPoint) -> Result<f64> {
    let x = position(data, p)?;
    Ok(x[0].hypot(x[1]))
}

/// Local parameter where the horizontal radius reaches `target` along the ray ψ.
fn ray_search(data: &WeierstrassData, end: &DeclaredEnd, psi: f64, target: f64) -> Result<f64> {
    let mut hi = local_radius_max(data, end);
    let mut lo = hi;
    for _ in 0..80 {
        if horizontal_radius(data, end_chart_point(data, end, lo, psi))? > target {
            break;
        }
        hi = lo;
        lo *= 0.5;
    }
    for _ in 0..50 {
        let mid = (lo * hi).sqrt();
        if horizontal_radius(data, end_chart_point(data, end, mid, psi))? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Positions on a chart annulus around `end` covering horizontal radii [R, 4R].
pub fn sample_end_ring(
    data: &WeierstrassData,
    end: &DeclaredEnd,
    r_inner: f64,
    n_rho: usize,
    n_psi: usize,
) -> Result<Vec<[f64; 3]>> {
    let probes = [0.25, 1.25, 2.25, 3.25, 4.25, 5.25].map(|k| k * PI / 3.0);
    let mut rho_in = f64::INFINITY;
    let mut rho_out: f64 = 0.0;
    for psi in probes {
        rho_in = rho_in.min(ray_search(data, end, psi, 4.0 * r_inner)?);
        rho_out = rho_out.max(ray_search(data, end, psi, r_inner)?);
    }
    let (l0, l1) = ((0.8 * rho_in).ln(), (1.25 * rho_out).ln());
    let pts: Vec<ChartPoint> = (0..n_rho)
        .flat_map(|i| {
            let rho = (l0 + (l1 - l0) * i as f64 / (n_rho - 1) as f64).exp();
            (0..n_psi).map(move |j| (rho, 2.0 * PI * (j as f64 + 0.5) / n_psi as f64))
        })
        .map(|(rho, psi)| end_chart_point(data, end, rho, psi))
        .collect();
    pts.par_iter().map(|p| position(data, *p)).collect()
}

/// End fit with automatic R: doubled from `r_start` until rms < 0.1·|b| or the budget runs out.
pub fn fit_end(data: &WeierstrassData, end: &DeclaredEnd, r_start: f64, max_doublings: usize) -> Result<EndFit> {
    let mut r = r_start;
    let mut best: Option<EndFit> = None;
    for _ in 0..=max_doublings {
        let samples = sample_end_ring(data, end, r, 12, 48)?;
        let fit = end_fit(&samples, r)?;
        let done = fit.rms < 0.1 * fit.b.abs().max(1e-3);
        best = Some(fit);
        if done {
            break;
        }
        r *= 2.0;
    }
    Ok(best.expect("at least one fit"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JorgeMeeks {
    pub deg: i64,
    pub lhs_minus_rhs: i64,
}

/// deg(g) against genus + ends − 1, with the degree read off a winding count.
pub fn jorge_meeks_check(data: &WeierstrassData, genus: i64, ends: i64) -> Result<JorgeMeeks> {
    let g = |z: C64| data.g.eval(z);
    let raw = match data.chart {
        Chart::Plane | Chart::Cylinder { .. } => {
            return Err(WlabError::NotApplicable(format!("{} has no finite-degree Gauss map on its chart", data.name)));
        }
        Chart::PuncturedPlane => {
            let big = data.forbidden_points().iter().map(|q| q.norm()).fold(1.0, f64::max) * 4.0;
            winding_raw(&g, &Contour::circle(C64::new(0.0, 0.0), big, 256).points())?
        }
        Chart::EllipticDoubleCover { lambda } => {
            let big = 4.0 * (lambda + 1.0 / lambda);
            let c = Contour::circle(C64::new(0.0, 0.0), big, 256).points();
            2.0 * winding_raw(&g, &c)?
        }
    };
    let deg = round_winding(raw).map_err(|_| WlabError::NonIntegerDegree(raw))?.abs();
    if deg == 0 {
        return Err(WlabError::NotApplicable("constant Gauss map".into()));
    }
    Ok(JorgeMeeks { deg, lhs_minus_rhs: deg - (genus + ends - 1) })
}
