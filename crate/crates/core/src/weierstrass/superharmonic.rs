use super::{immerse, metric_curvature, ChartPath, ChartPoint, WeierstrassData, PATH_TOL};
use crate::complexkit::grid::laplacian4;
use crate::complexkit::{ChartGrid, Contour, C64};
use crate::error::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperharmonicReport {
    /// max Δ(ln r − x₃²)
    pub max_laplacian: f64,
    /// max (|Δ ln r| − |∇x₃|²/r²)
    pub max_gap: f64,
    pub violation: f64,
    pub nodes: usize,
}

fn step(data: &WeierstrassData, a: C64, b: C64) -> Result<[f64; 3]> {
    let [p, q, h] = data.path_integrals(&ChartPath::single(Contour::segment(a, b)), PATH_TOL)?;
    let i = C64::new(0.0, 1.0);
    Ok([(0.5 * (p - q)).re, (0.5 * i * (p + q)).re, h.re])
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Grid positions by integrating cell edges outward from the first node.
fn grid_positions(data: &WeierstrassData, g: &ChartGrid) -> Result<Vec<[f64; 3]>> {
    let mut col0 = vec![immerse(data, &data.route(ChartPoint::new(g.point(0, 0))))?];
    for j in 1..g.ny {
        col0.push(add(col0[j - 1], step(data, g.point(0, j - 1), g.point(0, j))?));
    }
    let rows: Vec<Vec<[f64; 3]>> = (0..g.ny)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![col0[j]];
            for i in 1..g.nx {
                row.push(add(row[i - 1], step(data, g.point(i - 1, j), g.point(i, j))?));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Checks Δ(ln r − x₃²) ≤ 0 and |Δ ln r| ≤ |∇x₃|²/r² on a chart rectangle, Δ the surface Laplacian.
pub fn superharmonic_check(data: &WeierstrassData, grid: &ChartGrid) -> Result<SuperharmonicReport> {
    let pos = grid_positions(data, grid)?;
    let ln_r: Vec<C64> = pos.iter().map(|p| C64::new(p[0].hypot(p[1]).ln(), 0.0)).collect();
    let x3sq: Vec<C64> = pos.iter().map(|p| C64::new(p[2] * p[2], 0.0)).collect();
    let mut rep = SuperharmonicReport {
        max_laplacian: f64::NEG_INFINITY,
        max_gap: f64::NEG_INFINITY,
        violation: 0.0,
        nodes: 0,
    };
    for j in 2..grid.ny - 2 {
        for i in 2..grid.nx - 2 {
            let z = grid.point(i, j);
            let (lam, _, _) = metric_curvature(data, ChartPoint::new(z))?;
            let l2 = lam * lam;
            let dl = laplacian4(grid, &ln_r, i, j).re / l2;
            let dx3 = laplacian4(grid, &x3sq, i, j).re / l2;
            let grad2 = data.phi.eval(z).norm_sqr() / l2;
            let p = pos[grid.index(i, j)];
            let r2 = p[0] * p[0] + p[1] * p[1];
            rep.max_laplacian = rep.max_laplacian.max(dl - dx3);
            rep.max_gap = rep.max_gap.max(dl.abs() - grad2 / r2);
            rep.nodes += 1;
        }
    }
    rep.violation = rep.max_laplacian.max(rep.max_gap).max(0.0);
    Ok(rep)
}
