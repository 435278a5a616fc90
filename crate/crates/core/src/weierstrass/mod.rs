//! Weierstrass data (g, dh) and the geometry it generates.

mod ends;
mod mesh;
mod periods;
mod superharmonic;

pub use ends::{end_fit, fit_end, jorge_meeks_check, sample_end_ring, EndFit, JorgeMeeks};
pub use mesh::{ball_area_profile, mesh_polar, mesh_rect, total_curvature, MeshVertex, SurfaceMesh};
pub use periods::{
    end_loop, flux, flux_labeled, period_report, translation_period, CycleReport, EndResidue, FluxVector, PeriodReport,
};
pub use superharmonic::{superharmonic_check, SuperharmonicReport};

use crate::complexkit::quad::{integrate_segments, POLE_GUARD};
use crate::complexkit::{AnalyticFn, Contour, C64};
use crate::error::{Result, WlabError};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Coordinate chart carrying the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    Plane,
    PuncturedPlane,
    /// Strip model of ℂ/⟨i·period⟩.
    Cylinder { period: f64 },
    /// Two-sheeted cover of the z-plane, w² = z(z−λ)(λz+1), cuts [0, λ] and (−∞, −1/λ].
    EllipticDoubleCover { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndKind {
    Planar,
    Catenoidal,
    Helicoidal,
}

/// Point of the chart, with the sheet for double covers (+1 elsewhere).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub z: C64,
    pub sheet: i8,
}

impl ChartPoint {
    pub fn new(z: C64) -> Self {
        Self { z, sheet: 1 }
    }

    pub fn on_sheet(z: C64, sheet: i8) -> Self {
        Self { z, sheet }
    }
}

/// End of the surface: a finite chart point, or the point at infinity of the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredEnd {
    pub location: Option<C64>,
    pub kind: EndKind,
    /// Laurent order of g at the end: positive for zeros, negative for poles.
    pub g_order: i32,
}

/// Piece of a path lying on a single sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPiece {
    pub contour: Contour,
    pub sheet: i8,
}

/// Path or cycle on the chart, possibly switching sheets at branch cuts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChartPath {
    pub pieces: Vec<PathPiece>,
}

impl ChartPath {
    pub fn single(c: Contour) -> Self {
        Self { pieces: vec![PathPiece { contour: c, sheet: 1 }] }
    }

    pub fn on_sheet(c: Contour, sheet: i8) -> Self {
        Self { pieces: vec![PathPiece { contour: c, sheet }] }
    }

    pub fn push(&mut self, c: Contour, sheet: i8) {
        self.pieces.push(PathPiece { contour: c, sheet });
    }

    pub fn reversed(&self) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .rev()
                .map(|p| PathPiece { contour: p.contour.reversed(), sheet: p.sheet })
                .collect(),
        }
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(|p| p.contour.length()).sum()
    }

    pub fn points(&self) -> Vec<C64> {
        self.pieces.iter().flat_map(|p| p.contour.points()).collect()
    }

    fn distance_to(&self, z: C64) -> f64 {
        self.pieces.iter().map(|p| p.contour.distance_to(z)).fold(f64::INFINITY, f64::min)
    }
}

impl From<Contour> for ChartPath {
    fn from(c: Contour) -> Self {
        Self::single(c)
    }
}

/// Weierstrass pair (g, dh = phi·dz) on a chart, with base point and declared ends.
#[derive(Debug, Clone)]
pub struct WeierstrassData {
    pub name: String,
    pub g: AnalyticFn,
    pub phi: AnalyticFn,
    pub chart: Chart,
    pub base_point: ChartPoint,
    /// Image of the base point in ℝ³.
    pub base_position: [f64; 3],
    pub ends: Vec<DeclaredEnd>,
}

/// Integral tolerance used for positions and periods.
pub const PATH_TOL: f64 = 1e-11;

impl WeierstrassData {
    /// Height density on a given sheet.
    pub fn phi_at(&self, z: C64, sheet: i8) -> C64 {
        let v = self.phi.eval(z);
        if sheet < 0 {
            -v
        } else {
            v
        }
    }

    /// Locations that integration paths must avoid.
    pub fn forbidden_points(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self.ends.iter().filter_map(|e| e.location).collect();
        v.extend(self.g.singularities().iter().map(|s| s.location));
        v.extend(self.phi.singularities().iter().map(|s| s.location));
        v
    }

    /// The guard shrinks for paths that start or end close to a forbidden point.
    fn check_path(&self, path: &ChartPath) -> Result<()> {
        let ends = match (path.pieces.first(), path.pieces.last()) {
            (Some(a), Some(b)) => [a.contour.start(), b.contour.end()],
            _ => return Ok(()),
        };
        for p in self.forbidden_points() {
            let guard = ends.iter().map(|e| 0.5 * (e - p).norm()).fold(POLE_GUARD, f64::min);
            if path.distance_to(p) < guard {
                return Err(WlabError::SingularityOnPath(format!("{p}")));
            }
        }
        Ok(())
    }

    /// (∫ phi/g, ∫ g·phi, ∫ phi) along a path, each integrated separately.
    pub fn path_integrals(&self, path: &ChartPath, tol: f64) -> Result<[C64; 3]> {
        self.check_path(path)?;
        let mut out = [C64::new(0.0, 0.0); 3];
        for piece in &path.pieces {
            let segs = piece.contour.segments();
            let s = piece.sheet;
            out[0] += integrate_segments(&|z| self.phi_at(z, s) / self.g.eval(z), &segs, tol)?;
            out[1] += integrate_segments(&|z| self.g.eval(z) * self.phi_at(z, s), &segs, tol)?;
            out[2] += integrate_segments(&|z| self.phi_at(z, s), &segs, tol)?;
        }
        Ok(out)
    }

    /// Default path from the base point to `target`, avoiding ends and branch cuts.
    pub fn route(&self, target: ChartPoint) -> ChartPath {
        let b = self.base_point.z;
        match self.chart {
            Chart::PuncturedPlane => route_punctured(b, target.z),
            Chart::EllipticDoubleCover { lambda } => route_elliptic(lambda, b, target),
            Chart::Plane | Chart::Cylinder { .. } => route_detour(b, target.z, &self.forbidden_points()),
        }
    }
}

/// Period-lattice–free integral from the base point; the closure conditions make it path independent.
fn route_punctured(b: C64, t: C64) -> ChartPath {
    let (rb, rt) = (b.norm(), t.norm());
    let (ab, mut at) = (b.arg(), t.arg());
    if at - ab > PI {
        at -= 2.0 * PI;
    } else if ab - at > PI {
        at += 2.0 * PI;
    }
    let n = ((at - ab).abs() / (PI / 32.0)).ceil().max(1.0) as usize;
    let mut pts: Vec<C64> = (0..=n)
        .map(|j| C64::from_polar(rb, ab + (at - ab) * j as f64 / n as f64))
        .collect();
    pts.push(C64::from_polar(rt, at));
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
    if pts.len() < 2 {
        return ChartPath::default();
    }
    ChartPath::single(Contour::through(&pts))
}

/// Straight segment, bent around any forbidden point that comes too close.
fn route_detour(b: C64, t: C64, forbidden: &[C64]) -> ChartPath {
    if (t - b).norm() == 0.0 {
        return ChartPath::default();
    }
    let mut pts = vec![b, t];
    for _ in 0..8 {
        let mut changed = false;
        let mut k = 0;
        while k + 1 < pts.len() {
            let (a, c) = (pts[k], pts[k + 1]);
            let len = (c - a).norm();
            let hit = forbidden.iter().copied().find(|&p| {
                let d = crate::complexkit::contour::segment_distance(a, c, p);
                d < 0.05 * len.min(1.0) && (p - a).norm() > 1e-9 && (p - c).norm() > 1e-9
            });
            if let Some(p) = hit {
                let dir = (c - a) / len;
                let normal = dir * C64::new(0.0, 1.0);
                let side = if ((p - a) * normal.conj()).re > 0.0 { -1.0 } else { 1.0 };
                let proj = a + dir * ((p - a) * dir.conj()).re;
                pts.insert(k + 1, proj + normal * side * (0.25 * len.min(1.0)));
                changed = true;
            }
            k += 1;
        }
        if !changed {
            break;
        }
    }
    ChartPath::single(Contour::through(&pts))
}

/// Paths on the double cover: stay in one half-plane per segment, cross cuts only on purpose.
fn route_elliptic(lambda: f64, b: C64, target: ChartPoint) -> ChartPath {
    let i = C64::new(0.0, 1.0);
    // targets close to a branch point are reached by a final radial leg
    let r0 = 0.2 * lambda.min(1.0 / lambda);
    let near = [C64::new(0.0, 0.0), C64::new(lambda, 0.0), C64::new(-1.0 / lambda, 0.0)]
        .into_iter()
        .find(|&p| (target.z - p).norm() < r0 && (target.z - p).norm() > 0.0);
    let t = match near {
        Some(p) => p + (target.z - p) * (r0 / (target.z - p).norm()),
        None => target.z,
    };
    let gap = C64::new(lambda + 1.0, 0.0);
    let mut path = ChartPath::default();
    if target.sheet > 0 {
        if t.im >= 0.0 {
            path.push(Contour::segment(b, t), 1);
        } else {
            path.push(Contour::through(&[b, gap, gap - i, t]), 1);
        }
    } else {
        let cross = C64::new(0.5 * lambda, 0.0);
        path.push(Contour::segment(b, cross), 1);
        if t.im <= 0.0 {
            path.push(Contour::through(&[cross, cross - i, t]), -1);
        } else {
            path.push(Contour::through(&[cross, gap - i, gap, gap + i, t]), -1);
        }
    }
    if near.is_some() {
        path.push(Contour::segment(t, target.z), target.sheet);
    }
    path
}

/// X = X(p₀) + Re ∫ (½(1/g − g), (i/2)(1/g + g), 1) dh along `path` from the base point.
pub fn immerse(data: &WeierstrassData, path: &ChartPath) -> Result<[f64; 3]> {
    let o = data.base_position;
    if path.pieces.is_empty() {
        return Ok(o);
    }
    let [a, b, c] = data.path_integrals(path, PATH_TOL)?;
    let i = C64::new(0.0, 1.0);
    let x1 = 0.5 * (a - b);
    let x2 = 0.5 * i * (a + b);
    Ok([o[0] + x1.re, o[1] + x2.re, o[2] + c.re])
}

/// Position of a chart point via the default route.
pub fn position(data: &WeierstrassData, target: ChartPoint) -> Result<[f64; 3]> {
    immerse(data, &data.route(target))
}

/// Unit normal from the stereographic Gauss map.
pub fn normal_from_g(g: C64) -> [f64; 3] {
    let m = g.norm_sqr();
    if !m.is_finite() || m > 1e300 {
        return [0.0, 0.0, 1.0];
    }
    let d = m + 1.0;
    [2.0 * g.re / d, 2.0 * g.im / d, (m - 1.0) / d]
}

/// Conformal factor, Gauss curvature and unit normal at a chart point.
pub fn metric_curvature(data: &WeierstrassData, at: ChartPoint) -> Result<(f64, f64, [f64; 3])> {
    let jet = data.g.jet(at.z, 1)?;
    let (g, gp) = (jet.c[0], jet.c[1]);
    let phi = data.phi_at(at.z, at.sheet);
    let ag = g.norm();
    if ag == 0.0 || !ag.is_finite() || phi.norm() == 0.0 || !phi.norm().is_finite() || !gp.norm().is_finite() {
        return Err(WlabError::SingularPoint(format!("{}", at.z)));
    }
    let lam = 0.5 * (ag + 1.0 / ag) * phi.norm();
    let k = -(2.0 * gp.norm() / ((1.0 + ag * ag) * lam)).powi(2);
    Ok((lam, k, normal_from_g(g)))
}

/// López–Ros deformation (λg, dh).
pub fn lopez_ros(data: &WeierstrassData, lambda: f64) -> Result<WeierstrassData> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(WlabError::Precondition("López–Ros parameter must be positive".into()));
    }
    if lambda == 1.0 {
        return Ok(data.clone());
    }
    Ok(WeierstrassData {
        name: format!("{}-lopez-ros", data.name),
        g: data.g.scale(C64::new(lambda, 0.0)),
        ..data.clone()
    })
}

/// Associate surface (g, e^{iθ} dh).
pub fn associate(data: &WeierstrassData, theta: f64) -> WeierstrassData {
    if theta == 0.0 {
        return data.clone();
    }
    WeierstrassData {
        name: format!("{}-associate", data.name),
        phi: data.phi.scale(C64::from_polar(1.0, theta)),
        ..data.clone()
    }
}

/// Rigid rotation of the surface about the x₃-axis, (e^{iφ} g, dh).
pub fn rotate(data: &WeierstrassData, angle: f64) -> WeierstrassData {
    WeierstrassData { g: data.g.scale(C64::from_polar(1.0, angle)), ..data.clone() }
}

/// Homothety (g, s·dh).
pub fn homothety(data: &WeierstrassData, s: f64) -> WeierstrassData {
    WeierstrassData { phi: data.phi.scale(C64::new(s, 0.0)), ..data.clone() }
}
