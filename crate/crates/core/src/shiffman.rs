//! Jacobi-function layer in the dh = dz gauge: level-curve curvature, the Shiffman function,
//! the h ↦ (ġ(h), f(h)) correspondence, Montiel–Ros maps and divisor checks.

use crate::complexkit::grid::{d_dz, laplacian5};
use crate::complexkit::quad::integrate_segments;
use crate::complexkit::{count_zeros_poles, AnalyticFn, ChartGrid, Contour, Jet, LineAxis, SampledLine, C64};
use crate::error::{Result, WlabError};
use crate::weierstrass::{normal_from_g, Chart, ChartPoint, DeclaredEnd, WeierstrassData};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Rejects data whose height differential is not dz.
pub fn require_dz(data: &WeierstrassData) -> Result<()> {
    let probes = [c(0.13, 0.29), c(-0.71, 0.05), c(0.4, -0.6)];
    let ok = probes
        .iter()
        .all(|&z| data.phi.singular_distance(z) < 1e-9 || (data.phi.eval(z) - 1.0).norm() < 1e-13);
    if ok {
        Ok(())
    } else {
        Err(WlabError::Precondition(format!("'{}' is not in the dh = dz gauge", data.name)))
    }
}

/// Pull data on ℂ∖{0} with dh = k dz/z back by z = e^w, giving g(e^w) and dh = dw up to the factor k.
pub fn rechart_log(data: &WeierstrassData) -> Result<WeierstrassData> {
    if data.chart != Chart::PuncturedPlane {
        return Err(WlabError::Precondition("log re-chart needs a punctured-plane chart".into()));
    }
    let k = data.phi.eval(c(1.0, 0.0));
    let z = c(0.3, 0.8);
    if (data.phi.eval(z) * z - k).norm() > 1e-12 * k.norm() {
        return Err(WlabError::Precondition("height differential is not a multiple of dz/z".into()));
    }
    if (k - 1.0).norm() > 1e-12 {
        return Err(WlabError::Precondition(format!("dh = {k} dz/z; rescale the data first")));
    }
    let g = data.g.clone();
    let gj = data.g.clone();
    let pulled = AnalyticFn::new(move |w: C64| g.eval(w.exp())).with_taylor(move |w, n| {
        // compose the jet of g at e^w with the jet of e^w − e^{w0}
        let e = Jet::variable(w, n + 1).exp();
        let inner = &e - &Jet::constant(e.value(), n + 1);
        let outer = gj.jet(e.value(), n).map(|j| j.c).unwrap_or_else(|_| vec![c(f64::NAN, 0.0); n + 1]);
        let mut acc = Jet::constant(outer[n], n + 1);
        for coef in outer[..n].iter().rev() {
            acc = &(&acc * &inner) + &Jet::constant(*coef, n + 1);
        }
        acc.c
    });
    let mut out = data.clone();
    out.name = format!("{}-log", data.name);
    out.g = pulled;
    out.phi = AnalyticFn::constant(c(1.0, 0.0));
    out.chart = Chart::Cylinder { period: 2.0 * std::f64::consts::PI };
    out.base_point = ChartPoint::new(data.base_point.z.ln());
    out.ends = Vec::new();
    Ok(out)
}

/// Jet of g of length `n + 1` at a point of a level line.
fn g_jet(data: &WeierstrassData, z: C64, n: usize) -> Result<Jet> {
    if data.g.singular_distance(z) < crate::complexkit::POLE_GUARD {
        return Err(WlabError::SingularityOnLine);
    }
    let j = data.g.jet(z, n)?;
    if !j.c.iter().all(|v| v.is_finite()) || j.value().norm() < 1e-12 {
        return Err(WlabError::SingularityOnLine);
    }
    Ok(j)
}

/// Planar curvature κ_c(y) of the level curve z = c + iy.
pub fn planar_curvature(data: &WeierstrassData, level: f64, ys: &[f64]) -> Result<Vec<f64>> {
    require_dz(data)?;
    ys.iter()
        .map(|&y| {
            let j = g_jet(data, c(level, y), 1).map_err(|_| WlabError::SingularityOnLevel)?;
            let (g, gp) = (j.c[0], j.c[1]);
            Ok(g.norm() / (1.0 + g.norm_sqr()) * (gp / g).re)
        })
        .collect()
}

/// Sign changes of ∂κ/∂y over one period of the level curve, from `n` samples.
pub fn curvature_vertices(data: &WeierstrassData, level: f64, period: f64, n: usize) -> Result<usize> {
    let ys: Vec<f64> = (0..n).map(|j| period * j as f64 / n as f64).collect();
    let k = planar_curvature(data, level, &ys)?;
    let line = SampledLine::horizontal(0.0, 0.0, n, period, |_| c(0.0, 0.0)).with_values(k.iter().map(|&v| c(v, 0.0)).collect());
    let dk: Vec<f64> = line.dz(1).values.iter().map(|v| v.re).collect();
    let scale = dk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s: Vec<f64> = dk.into_iter().filter(|v| v.abs() > 1e-9 * scale).collect();
    Ok((0..s.len()).filter(|&j| s[j] * s[(j + 1) % s.len()] < 0.0).count())
}

fn shiffman_at(data: &WeierstrassData, z: C64) -> Result<f64> {
    let j = g_jet(data, z, 2)?;
    let (g, gp, gpp) = (j.c[0], j.c[1], 2.0 * j.c[2]);
    let x = gp / g;
    Ok((1.5 * x * x - gpp / g - x * x / (1.0 + g.norm_sqr())).im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Real,
    Complexified,
}

/// Samples of a (possibly complexified) Jacobi field on a chart grid.
/// Fields built from a level line use a three-column strip centred on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiField {
    pub kind: FieldKind,
    pub grid: ChartGrid,
    pub values: Vec<C64>,
}

fn strip(line: &SampledLine) -> Result<ChartGrid> {
    if line.axis != LineAxis::Vertical {
        return Err(WlabError::Precondition("level lines are vertical in the dh = dz chart".into()));
    }
    let h = line.spacing();
    let y1 = line.start + h * (line.n() - 1) as f64;
    Ok(ChartGrid::spanning(line.offset - h, line.offset + h, line.start, y1, 3, line.n()))
}

impl JacobiField {
    pub fn sample(kind: FieldKind, grid: ChartGrid, f: impl Fn(C64) -> Result<C64> + Sync) -> Result<Self> {
        let pts = grid.sample(|z| z);
        let values = pts.par_iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WlabError::SingularityOnLine);
        }
        Ok(Self { kind, grid, values })
    }

    pub fn on_line(kind: FieldKind, line: &SampledLine, f: impl Fn(C64) -> Result<C64> + Sync) -> Result<Self> {
        Self::sample(kind, strip(line)?, f)
    }

    /// Values on the centre column of a strip, or the whole grid otherwise.
    pub fn line_values(&self) -> Vec<C64> {
        if self.grid.nx == 3 {
            (0..self.grid.ny).map(|j| self.values[self.grid.index(1, j)]).collect()
        } else {
            self.values.clone()
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> Self {
        Self { kind: FieldKind::Real, grid: self.grid, values: self.values.iter().map(|v| c(v.re, 0.0)).collect() }
    }

    pub fn imag_part(&self) -> Self {
        Self { kind: FieldKind::Real, grid: self.grid, values: self.values.iter().map(|v| c(v.im, 0.0)).collect() }
    }

    /// CSV rows `y,re_v,im_v,residual` for the centre column (strip fields) or `x,y,…` for grids.
    pub fn write_csv<W: Write>(&self, data: &WeierstrassData, out: W) -> Result<()> {
        let res = jacobi_residual_samples(data, self)?;
        let mut w = csv::Writer::from_writer(out);
        let strip = self.grid.nx == 3;
        if strip {
            w.write_record(["y", "re_v", "im_v", "residual"]).map_err(io_err)?;
        } else {
            w.write_record(["x", "y", "re_v", "im_v", "residual"]).map_err(io_err)?;
        }
        for j in 0..self.grid.ny {
            let cols: Vec<usize> = if strip { vec![1] } else { (0..self.grid.nx).collect() };
            for i in cols {
                let k = self.grid.index(i, j);
                let z = self.grid.point(i, j);
                let v = self.values[k];
                let r = res[k].map(|r| r.to_string()).unwrap_or_default();
                let mut rec = Vec::new();
                if !strip {
                    rec.push(z.re.to_string());
                }
                rec.extend([z.im.to_string(), v.re.to_string(), v.im.to_string(), r]);
                w.write_record(&rec).map_err(io_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn io_err(e: csv::Error) -> WlabError {
    WlabError::Io(e.to_string())
}

/// Shiffman function on the strip around a vertical level line.
pub fn shiffman(data: &WeierstrassData, line: &SampledLine) -> Result<JacobiField> {
    require_dz(data)?;
    JacobiField::on_line(FieldKind::Real, line, |z| shiffman_at(data, z).map(|s| c(s, 0.0)))
}

/// Shiffman function on an arbitrary chart grid.
pub fn shiffman_on_grid(data: &WeierstrassData, grid: ChartGrid) -> Result<JacobiField> {
    require_dz(data)?;
    JacobiField::sample(FieldKind::Real, grid, |z| shiffman_at(data, z).map(|s| c(s, 0.0)))
}

/// Potential 2|g′|²/(1+|g|²)² of the Jacobi operator.
pub fn jacobi_potential(data: &WeierstrassData, z: C64) -> Result<f64> {
    let j = g_jet(data, z, 1)?;
    let m = 1.0 + j.c[0].norm_sqr();
    Ok(2.0 * j.c[1].norm_sqr() / (m * m))
}

/// Per-node |v_zz̄ + 2|g′|²/(1+|g|²)² v|, `None` on boundary nodes.
pub fn jacobi_residual_samples(data: &WeierstrassData, v: &JacobiField) -> Result<Vec<Option<f64>>> {
    let g = v.grid;
    let mut out = vec![None; g.len()];
    let interior: Vec<(usize, usize)> =
        (1..g.ny.saturating_sub(1)).flat_map(|j| (1..g.nx.saturating_sub(1)).map(move |i| (i, j))).collect();
    let vals = interior
        .par_iter()
        .map(|&(i, j)| {
            let lap = 0.25 * laplacian5(&g, &v.values, i, j);
            let q = jacobi_potential(data, g.point(i, j))?;
            Ok((lap + q * v.values[g.index(i, j)]).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    for (&(i, j), r) in interior.iter().zip(vals) {
        out[g.index(i, j)] = Some(r);
    }
    Ok(out)
}

/// max over interior nodes of |v_zz̄ + 2|g′|²/(1+|g|²)² v| (second-order stencil).
pub fn jacobi_residual(data: &WeierstrassData, v: &JacobiField) -> Result<f64> {
    Ok(jacobi_residual_samples(data, v)?.into_iter().flatten().fold(0.0, f64::max))
}

type HRule = dyn Fn(&Jet) -> Jet + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HProvenance {
    User,
    HS,
    OneOverG,
    C1PlusC2OverG2 { c1: C64, c2: C64 },
}

/// Meromorphic h given as a rational expression of g and its derivatives.
#[derive(Clone)]
pub struct HFunction {
    pub provenance: HProvenance,
    /// Number of derivatives of g the expression consumes.
    pub order: usize,
    rule: Arc<HRule>,
}

impl fmt::Debug for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HFunction").field("provenance", &self.provenance).field("order", &self.order).finish()
    }
}

impl HFunction {
    /// `rule` maps a jet of g (length L) to a jet of h (length L − order).
    pub fn user(order: usize, rule: impl Fn(&Jet) -> Jet + Send + Sync + 'static) -> Self {
        Self { provenance: HProvenance::User, order, rule: Arc::new(rule) }
    }

    /// h_S = (i/2)(g′)²/g³.
    pub fn h_s() -> Self {
        Self {
            provenance: HProvenance::HS,
            order: 1,
            rule: Arc::new(|g: &Jet| {
                let gp = g.derivative();
                let g = g.truncate(gp.len());
                (&(&gp * &gp) * &g.powi(-3)).scale(c(0.0, 0.5))
            }),
        }
    }

    pub fn one_over_g() -> Self {
        Self { provenance: HProvenance::OneOverG, order: 0, rule: Arc::new(|g: &Jet| g.recip()) }
    }

    pub fn c1_plus_c2_over_g2(c1: C64, c2: C64) -> Self {
        Self {
            provenance: HProvenance::C1PlusC2OverG2 { c1, c2 },
            order: 0,
            rule: Arc::new(move |g: &Jet| &Jet::constant(c1, g.len()) + &g.powi(-2).scale(c2)),
        }
    }

    pub fn jet_from_g(&self, g: &Jet) -> Jet {
        (self.rule)(g)
    }

    /// h at `z`, with exact Taylor jets inherited from g.
    pub fn evaluator(&self, data: &WeierstrassData) -> AnalyticFn {
        let (g, h) = (data.g.clone(), self.clone());
        let (g2, h2) = (g.clone(), h.clone());
        AnalyticFn::new(move |z| h_jet_at(&g, &h, z, 0).c[0])
            .with_taylor(move |z, n| h_jet_at(&g2, &h2, z, n).c)
            .with_singularities(data.g.singularities().to_vec())
    }
}

fn nan_jet(n: usize) -> Jet {
    Jet::new(vec![c(f64::NAN, f64::NAN); n + 1])
}

fn h_jet_at(g: &AnalyticFn, h: &HFunction, z: C64, n: usize) -> Jet {
    match g.jet(z, n + h.order) {
        Ok(gj) => h.jet_from_g(&gj).truncate(n + 1),
        Err(_) => nan_jet(n),
    }
}

fn gdot_jet(g: &AnalyticFn, h: &HFunction, z: C64, n: usize) -> Jet {
    let Ok(gj) = g.jet(z, n + h.order + 2) else { return nan_jet(n) };
    let hp = h.jet_from_g(&gj).derivative();
    let gp = gj.derivative();
    let g3 = gj.powi(3);
    let q = (&(&g3 * &hp) * &gp.recip()).scale(c(0.5, 0.0));
    q.derivative().truncate(n + 1)
}

/// ġ(h) = ((g³h′)/(2g′))′ with exact jets.
pub fn gdot(h: &HFunction, data: &WeierstrassData) -> AnalyticFn {
    let (g, hh) = (data.g.clone(), h.clone());
    let (g2, hh2) = (g.clone(), hh.clone());
    AnalyticFn::new(move |z| gdot_jet(&g, &hh, z, 0).c[0])
        .with_taylor(move |z, n| gdot_jet(&g2, &hh2, z, n).c)
        .with_singularities(data.g.singularities().to_vec())
}

fn f_of_h_at(data: &WeierstrassData, h: &HFunction, z: C64) -> Result<C64> {
    let gj = g_jet(data, z, h.order + 1)?;
    let hj = h.jet_from_g(&gj);
    let (g, gp, hv, hp) = (gj.c[0], gj.c[1], hj.c[0], hj.c[1]);
    if gp.norm() < 1e-12 {
        return Err(WlabError::SingularityOnLine);
    }
    Ok(g * g * hp / gp + 2.0 * g * hv / (1.0 + g.norm_sqr()))
}

/// Complexified Jacobi field f(h) = g²h′/g′ + 2gh/(1+|g|²) on the strip around `line`.
pub fn f_of_h(h: &HFunction, data: &WeierstrassData, line: &SampledLine) -> Result<JacobiField> {
    require_dz(data)?;
    JacobiField::on_line(FieldKind::Complexified, line, |z| f_of_h_at(data, h, z))
}

/// f(h) on a chart grid.
pub fn f_of_h_on_grid(h: &HFunction, data: &WeierstrassData, grid: ChartGrid) -> Result<JacobiField> {
    require_dz(data)?;
    JacobiField::sample(FieldKind::Complexified, grid, |z| f_of_h_at(data, h, z))
}

/// Least-squares linear Jacobi part: real `a` minimising Σ(v − ⟨a, N⟩)², with the rms misfit.
pub fn fit_linear(data: &WeierstrassData, points: &[C64], values: &[f64]) -> Result<([f64; 3], f64)> {
    let n = points.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, 3);
    for (k, &z) in points.iter().enumerate() {
        let nv = normal_from_g(data.g.eval(z));
        for j in 0..3 {
            m[(k, j)] = nv[j];
        }
    }
    let b = nalgebra::DVector::from_column_slice(values);
    let svd = m.clone().svd(true, true);
    let a = svd.solve(&b, 1e-12).map_err(|e| WlabError::Precondition(e.to_string()))?;
    let r = &m * &a - &b;
    Ok(([a[0], a[1], a[2]], (r.norm_squared() / n.max(1) as f64).sqrt()))
}

/// Real part of f(h_S) minus S, fitted by a linear Jacobi function along the line.
pub fn shiffman_linear_offset(data: &WeierstrassData, line: &SampledLine) -> Result<([f64; 3], f64)> {
    let s = shiffman(data, line)?.line_values();
    let f = f_of_h(&HFunction::h_s(), data, line)?.line_values();
    let pts = line.points();
    let diff: Vec<f64> = f.iter().zip(&s).map(|(a, b)| a.re - b.re).collect();
    fit_linear(data, &pts, &diff)
}

fn normal_c(g: C64) -> [C64; 3] {
    normal_from_g(g).map(|v| c(v, 0.0))
}

/// Montiel–Ros map X_v = vN + (v_z N_z̄ + v_z̄ N_z)/|N_z|² on the field's grid (4th-order differences).
pub fn montiel_ros(v: &JacobiField, data: &WeierstrassData) -> Result<Vec<[C64; 3]>> {
    let grid = v.grid;
    if grid.nx < 5 || grid.ny < 5 {
        return Err(WlabError::Precondition("Montiel–Ros map needs at least 5×5 nodes".into()));
    }
    let pts = grid.sample(|z| z);
    for &z in &pts {
        let j = data.g.jet(z, 1)?;
        if j.c[1].norm() < 1e-8 * (1.0 + j.c[0].norm_sqr()) {
            return Err(WlabError::BranchPointOnGrid);
        }
    }
    let normals: Vec<[C64; 3]> = pts.iter().map(|&z| normal_c(data.g.eval(z))).collect();
    let vals: Vec<C64> = match v.kind {
        FieldKind::Real => v.values.iter().map(|x| c(x.re, 0.0)).collect(),
        FieldKind::Complexified => v.values.clone(),
    };
    let (vz, vzb) = d_dz(&grid, &vals);
    let mut nz = [vec![], vec![], vec![]];
    let mut nzb = [vec![], vec![], vec![]];
    for k in 0..3 {
        let comp: Vec<C64> = normals.iter().map(|n| n[k]).collect();
        let (a, b) = d_dz(&grid, &comp);
        nz[k] = a;
        nzb[k] = b;
    }
    Ok((0..grid.len())
        .map(|p| {
            let norm2: f64 = (0..3).map(|k| nz[k][p].norm_sqr()).sum();
            let mut x = [c(0.0, 0.0); 3];
            for k in 0..3 {
                x[k] = vals[p] * normals[p][k] + (vz[p] * nzb[k][p] + vzb[p] * nz[k][p]) / norm2;
            }
            x
        })
        .collect())
}

/// Largest distance of a sample from the sample mean.
pub fn spread(xs: &[[C64; 3]]) -> f64 {
    let n = xs.len().max(1) as f64;
    let mut mean = [c(0.0, 0.0); 3];
    for x in xs {
        for k in 0..3 {
            mean[k] += x[k] / n;
        }
    }
    xs.iter()
        .map(|x| (0..3).map(|k| (x[k] - mean[k]).norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Support function ⟨X, N⟩ on the grid.
pub fn support_function(xs: &[[C64; 3]], data: &WeierstrassData, grid: &ChartGrid) -> Vec<C64> {
    grid.sample(|z| z)
        .iter()
        .zip(xs)
        .map(|(&z, x)| {
            let n = normal_c(data.g.eval(z));
            x[0] * n[0] + x[1] * n[1] + x[2] * n[2]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndOrder {
    pub location: C64,
    pub g_order: i32,
    /// `i64::MAX` when the candidate vanishes identically near the end.
    pub order: i64,
    pub required: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentReport {
    pub pass: bool,
    pub orders: Vec<EndOrder>,
}

/// Divisor test (f) ≥ ∏ p_j q_j⁻³: order ≥ 1 at zeros of g and ≥ −3 at its poles.
pub fn tangent_check(candidate: &AnalyticFn, data: &WeierstrassData) -> Result<TangentReport> {
    let ends: Vec<&DeclaredEnd> = data.ends.iter().filter(|e| e.location.is_some() && e.g_order != 0).collect();
    if ends.is_empty() {
        return Err(WlabError::Precondition("no located zeros or poles of g declared".into()));
    }
    let locs: Vec<C64> = ends.iter().map(|e| e.location.unwrap_or_default()).collect();
    let orders = ends
        .par_iter()
        .enumerate()
        .map(|(k, e)| {
            let p = locs[k];
            let near = locs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, q)| (q - p).norm())
                .fold(f64::INFINITY, f64::min);
            let r = (0.3 * near).min(0.1);
            let circle = Contour::circle(p, r, 256);
            let scale = circle.points().iter().map(|&z| data.g.eval(z).norm()).fold(1.0, f64::max);
            let vanishes = circle.points().iter().all(|&z| candidate.eval(z).norm() < 1e-9 * scale);
            // the zero function lies in every tangent space
            let order = if vanishes { i64::MAX } else { count_zeros_poles(candidate, &circle)? };
            let required = if e.g_order > 0 { 1 } else { -3 };
            Ok(EndOrder { location: p, g_order: e.g_order, order, required })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentReport { pass: orders.iter().all(|o| o.order >= o.required), orders })
}

/// (∮ ġ/g² dz, ∮ ġ dz) along Γ; both vanish when ġ preserves the period map.
pub fn kernel_flux_check(gdot: &AnalyticFn, data: &WeierstrassData, gamma: &Contour) -> Result<(C64, C64)> {
    let segs = gamma.segments();
    let mut forbidden: Vec<C64> = data.g.singularities().iter().map(|s| s.location).collect();
    forbidden.extend(data.ends.iter().filter_map(|e| e.location));
    forbidden.extend(gdot.singularities().iter().map(|s| s.location));
    for p in forbidden {
        let d = segs
            .iter()
            .map(|&(a, b)| crate::complexkit::contour::segment_distance(a, b, p))
            .fold(f64::INFINITY, f64::min);
        if d < crate::complexkit::POLE_GUARD {
            return Err(WlabError::SingularityOnPath(format!("{p}")));
        }
    }
    let i1 = integrate_segments(
        &|z| {
            let g = data.g.eval(z);
            gdot.eval(z) / (g * g)
        },
        &segs,
        1e-12,
    )?;
    let i2 = integrate_segments(&|z| gdot.eval(z), &segs, 1e-12)?;
    Ok((i1, i2))
}

/// Jet-level derivative of an analytic function.
pub fn derivative(f: &AnalyticFn) -> AnalyticFn {
    let (a, b) = (f.clone(), f.clone());
    AnalyticFn::new(move |z| a.jet(z, 1).map(|j| j.c[1]).unwrap_or(c(f64::NAN, 0.0)))
        .with_taylor(move |z, n| match b.jet(z, n + 1) {
            Ok(j) => j.derivative().c,
            Err(_) => nan_jet(n).c,
        })
        .with_singularities(f.singularities().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_catenoid, make_catenoid_cover, make_helicoid_levels, make_perturbed, make_plane};
    use std::f64::consts::PI;

    fn line(x0: f64, n: usize) -> SampledLine {
        SampledLine::vertical(x0, n, 1.0, |_| c(0.0, 0.0))
    }

    #[test]
    fn catenoid_level_curvature_is_constant() {
        let k = planar_curvature(&make_catenoid_cover(), 0.0, &[0.0, 0.7, 2.1]).unwrap();
        assert!(k.iter().all(|v| (v - 0.5).abs() < 1e-14));
    }

    #[test]
    fn helicoid_levels_are_straight() {
        let k = planar_curvature(&make_helicoid_levels(), 0.3, &[0.0, 0.4, 1.3]).unwrap();
        assert!(k.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn perturbed_level_has_four_vertices() {
        assert!(curvature_vertices(&make_perturbed(0.1), 0.0, 1.0, 256).unwrap() >= 4);
    }

    #[test]
    fn gauge_is_enforced() {
        assert!(shiffman(&make_catenoid(), &line(0.0, 16)).is_err());
        let d = rechart_log(&make_catenoid()).unwrap();
        let s = shiffman(&d, &SampledLine::vertical(0.2, 32, 2.0 * PI, |_| c(0.0, 0.0))).unwrap();
        assert!(s.sup() < 1e-10);
        assert!(rechart_log(&make_plane()).is_err());
    }

    #[test]
    fn constants_are_not_jacobi() {
        let d = make_catenoid_cover();
        let v = JacobiField::on_line(FieldKind::Real, &line(0.3, 32), |_| Ok(c(1.0, 0.0))).unwrap();
        let floor = (0..32)
            .map(|j| jacobi_potential(&d, c(0.3, j as f64 / 32.0)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(jacobi_residual(&d, &v).unwrap() >= floor * 0.999);
    }

    #[test]
    fn vertical_normal_is_jacobi() {
        let d = make_catenoid_cover();
        let field = |n| {
            let v = JacobiField::on_line(FieldKind::Real, &line(0.4, n), |z| {
                let m = d.g.eval(z).norm_sqr();
                Ok(c((m - 1.0) / (m + 1.0), 0.0))
            })
            .unwrap();
            jacobi_residual(&d, &v).unwrap()
        };
        let (r1, r2) = (field(32), field(64));
        assert!(r2 < r1 / 3.0, "{r1} {r2}");
    }

    #[test]
    fn f_is_additive_in_h() {
        let d = make_perturbed(0.1);
        let l = line(0.1, 32);
        let (h1, h2) = (HFunction::h_s(), HFunction::one_over_g());
        let (a, b) = (h1.clone(), h2.clone());
        let sum = HFunction::user(1, move |g| {
            let x = a.jet_from_g(g);
            let y = b.jet_from_g(g).truncate(x.len());
            &x + &y
        });
        let f12 = f_of_h(&sum, &d, &l).unwrap();
        let f1 = f_of_h(&h1, &d, &l).unwrap();
        let f2 = f_of_h(&h2, &d, &l).unwrap();
        for k in 0..f12.values.len() {
            assert!((f12.values[k] - f1.values[k] - f2.values[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_gdot_has_zero_flux() {
        let d = make_catenoid_cover();
        let (a, b) = kernel_flux_check(&AnalyticFn::zero(), &d, &Contour::vertical_period(0.0, 0.0, 1.0, 32)).unwrap();
        assert_eq!((a, b), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let d = make_catenoid_cover();
        let s = shiffman(&d, &line(0.0, 8)).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("y,re_v,im_v,residual"));
        assert_eq!(text.lines().count(), 9);
    }
}
