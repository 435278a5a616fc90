use super::{metric_curvature, position, ChartPoint, WeierstrassData};
use crate::complexkit::C64;
use crate::error::{Result, WlabError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshVertex {
    pub domain: C64,
    pub sheet: i8,
    pub position: [f64; 3],
    pub normal: [f64; 3],
    pub lambda: f64,
    pub k: f64,
}

/// Immersed grid with per-vertex metric data and quad faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<MeshVertex>,
    pub faces: Vec<[usize; 4]>,
}

impl SurfaceMesh {
    pub fn merge(mut self, other: SurfaceMesh) -> SurfaceMesh {
        let off = self.vertices.len();
        self.vertices.extend(other.vertices);
        self.faces.extend(other.faces.into_iter().map(|f| f.map(|i| i + off)));
        self
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        self.vertices.iter().map(|v| v.position).collect()
    }
}

fn vertex(data: &WeierstrassData, p: ChartPoint) -> Result<MeshVertex> {
    let (lambda, k, normal) = metric_curvature(data, p)?;
    let position = position(data, p)?;
    if position.iter().any(|v| !v.is_finite()) {
        return Err(WlabError::SingularPoint(format!("{}", p.z)));
    }
    Ok(MeshVertex { domain: p.z, sheet: p.sheet, position, normal, lambda, k })
}

fn build(data: &WeierstrassData, rows: Vec<Vec<ChartPoint>>, wrap: bool) -> Result<SurfaceMesh> {
    let ny = rows.len();
    let nx = rows[0].len();
    let verts: Vec<Vec<MeshVertex>> = rows
        .par_iter()
        .map(|row| row.iter().map(|p| vertex(data, *p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let vertices: Vec<MeshVertex> = verts.into_iter().flatten().collect();
    let mut faces = Vec::new();
    let cols = if wrap { nx } else { nx - 1 };
    for j in 0..ny - 1 {
        for i in 0..cols {
            let i1 = (i + 1) % nx;
            faces.push([j * nx + i, j * nx + i1, (j + 1) * nx + i1, (j + 1) * nx + i]);
        }
    }
    Ok(SurfaceMesh { vertices, faces })
}

/// Mesh of the chart rectangle [x0, x1] × [y0, y1].
pub fn mesh_rect(
    data: &WeierstrassData,
    x: (f64, f64),
    y: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<SurfaceMesh> {
    let rows = (0..ny)
        .map(|j| {
            let yy = y.0 + (y.1 - y.0) * j as f64 / (ny - 1) as f64;
            (0..nx)
                .map(|i| ChartPoint::new(C64::new(x.0 + (x.1 - x.0) * i as f64 / (nx - 1) as f64, yy)))
                .collect()
        })
        .collect();
    build(data, rows, false)
}

/// Log-polar mesh e^{t0} ≤ |z| ≤ e^{t1}, angles offset by half a step so rows avoid the real axis.
pub fn mesh_polar(
    data: &WeierstrassData,
    t: (f64, f64),
    nr: usize,
    ntheta: usize,
    sheets: &[i8],
) -> Result<SurfaceMesh> {
    let mut mesh = SurfaceMesh { vertices: Vec::new(), faces: Vec::new() };
    for &s in sheets {
        let rows = (0..nr)
            .map(|j| {
                let r = (t.0 + (t.1 - t.0) * j as f64 / (nr - 1) as f64).exp();
                (0..ntheta)
                    .map(|i| ChartPoint::on_sheet(C64::from_polar(r, 2.0 * PI * (i as f64 + 0.5) / ntheta as f64), s))
                    .collect()
            })
            .collect();
        mesh = mesh.merge(build(data, rows, true)?);
    }
    Ok(mesh)
}

fn chart_area(p: [C64; 4]) -> f64 {
    let mut a = 0.0;
    for k in 0..4 {
        let (u, v) = (p[k], p[(k + 1) % 4]);
        a += u.re * v.im - v.re * u.im;
    }
    0.5 * a.abs()
}

/// ∫ K dA ≈ Σ_faces mean(K Λ²) · (chart area of the face).
pub fn total_curvature(mesh: &SurfaceMesh) -> f64 {
    mesh.faces
        .iter()
        .map(|f| {
            let vs = f.map(|i| mesh.vertices[i]);
            let mean: f64 = vs.iter().map(|v| v.k * v.lambda * v.lambda).sum::<f64>() / 4.0;
            mean * chart_area(vs.map(|v| v.domain))
        })
        .sum()
}

fn tri_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let x = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Area of the part of triangle (a, b, c) where the linear interpolant of `d` is ≤ 0.
fn clipped_area(p: [[f64; 3]; 3], d: [f64; 3]) -> f64 {
    let mut poly: Vec<[f64; 3]> = Vec::with_capacity(4);
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        if d[a] <= 0.0 {
            poly.push(p[a]);
        }
        if (d[a] <= 0.0) != (d[b] <= 0.0) {
            let t = d[a] / (d[a] - d[b]);
            poly.push([0, 1, 2].map(|i| p[a][i] + t * (p[b][i] - p[a][i])));
        }
    }
    (1..poly.len().saturating_sub(1)).map(|k| tri_area(poly[0], poly[k], poly[k + 1])).sum()
}

/// (R, A(R)/R²), straddling faces clipped along the linearly interpolated sphere.
pub fn ball_area_profile(mesh: &SurfaceMesh, center: [f64; 3], radii: &[f64]) -> Vec<(f64, f64)> {
    let dist = |p: [f64; 3]| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) + (p[2] - center[2]).powi(2)).sqrt();
    let tris: Vec<([[f64; 3]; 3], [f64; 3])> = mesh
        .faces
        .iter()
        .flat_map(|f| {
            let p = f.map(|i| mesh.vertices[i].position);
            [[p[0], p[1], p[2]], [p[0], p[2], p[3]]]
        })
        .map(|t| (t, t.map(dist)))
        .collect();
    radii
        .iter()
        .map(|&r| {
            let a: f64 = tris
                .par_iter()
                .map(|(t, d)| {
                    if d.iter().all(|&x| x <= r) {
                        tri_area(t[0], t[1], t[2])
                    } else if d.iter().all(|&x| x > r) {
                        0.0
                    } else {
                        clipped_area(*t, d.map(|x| x - r))
                    }
                })
                .sum();
            (r, a / (r * r))
        })
        .collect()
}
