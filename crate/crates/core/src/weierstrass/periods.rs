use super::{Chart, ChartPath, DeclaredEnd, WeierstrassData, PATH_TOL};
use crate::complexkit::{Contour, C64};
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Flux along a closed curve, F = Im ∮ (½(1/g − g), (i/2)(1/g + g), 1) dh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxVector {
    pub f: [f64; 3],
    pub label: String,
    pub contour: Vec<C64>,
}

impl FluxVector {
    pub fn norm(&self) -> f64 {
        self.f.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Closure data for one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub label: String,
    pub int_phi_over_g: C64,
    pub int_g_phi: C64,
    pub re_int_phi: f64,
    /// max(|conj(∮ g·phi) − ∮ phi/g|, |Re ∮ phi|)
    pub residual: f64,
}

/// Residue of phi/g at a zero of g, or of g·phi at a pole of g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndResidue {
    pub location: Option<C64>,
    pub form: String,
    pub residue: C64,
    pub loop_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub cycles: Vec<CycleReport>,
    pub ends: Vec<EndResidue>,
    pub residual: f64,
}

fn integrals_to_vector(v: [C64; 3]) -> [C64; 3] {
    let i = C64::new(0.0, 1.0);
    [0.5 * (v[0] - v[1]), 0.5 * i * (v[0] + v[1]), v[2]]
}

pub fn flux(data: &WeierstrassData, cycle: &ChartPath) -> Result<FluxVector> {
    flux_labeled(data, cycle, "cycle")
}

pub fn flux_labeled(data: &WeierstrassData, cycle: &ChartPath, label: &str) -> Result<FluxVector> {
    let v = integrals_to_vector(data.path_integrals(cycle, PATH_TOL)?);
    Ok(FluxVector { f: [v[0].im, v[1].im, v[2].im], label: label.to_string(), contour: cycle.points() })
}

/// ℝ³ period Re ∮ Φ along a cycle.
pub fn translation_period(data: &WeierstrassData, cycle: &ChartPath) -> Result<[f64; 3]> {
    let v = integrals_to_vector(data.path_integrals(cycle, PATH_TOL)?);
    Ok([v[0].re, v[1].re, v[2].re])
}

fn cycle_report(data: &WeierstrassData, cycle: &ChartPath, label: String) -> Result<CycleReport> {
    let [a, b, c] = data.path_integrals(cycle, PATH_TOL)?;
    let residual = (b.conj() - a).norm().max(c.re.abs());
    Ok(CycleReport { label, int_phi_over_g: a, int_g_phi: b, re_int_phi: c.re, residual })
}

/// Small loop around an end on the surface (doubled around branch points of the double cover).
pub fn end_loop(data: &WeierstrassData, end: &DeclaredEnd) -> ChartPath {
    let forbidden = data.forbidden_points();
    let branch = matches!(data.chart, Chart::EllipticDoubleCover { .. });
    match end.location {
        Some(p) => {
            let d = forbidden
                .iter()
                .map(|q| (q - p).norm())
                .filter(|&d| d > 1e-9)
                .fold(f64::INFINITY, f64::min);
            let r = if d.is_finite() { (0.4 * d).min(0.25) } else { 0.25 };
            let c = Contour::circle(p, r, 96);
            let mut path = ChartPath::on_sheet(c.clone(), 1);
            if branch {
                path.push(c, -1);
            }
            path
        }
        None => {
            let big = forbidden.iter().map(|q| q.norm()).fold(1.0, f64::max) * 4.0;
            let c = Contour::circle(C64::new(0.0, 0.0), big, 192).reversed();
            let mut path = ChartPath::on_sheet(c.clone(), 1);
            if branch {
                path.push(c, -1);
            }
            path
        }
    }
}

pub fn period_report(data: &WeierstrassData, cycles: &[ChartPath]) -> Result<PeriodReport> {
    let mut out = PeriodReport { cycles: Vec::new(), ends: Vec::new(), residual: 0.0 };
    for (k, c) in cycles.iter().enumerate() {
        let r = cycle_report(data, c, format!("cycle-{k}"))?;
        out.residual = out.residual.max(r.residual);
        out.cycles.push(r);
    }
    for end in data.ends.iter().filter(|e| e.g_order != 0) {
        let lp = end_loop(data, end);
        let r = cycle_report(data, &lp, "end".into())?;
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        let (form, residue) = if end.g_order > 0 {
            ("phi/g", r.int_phi_over_g / two_pi_i)
        } else {
            ("g*phi", r.int_g_phi / two_pi_i)
        };
        out.residual = out.residual.max(r.residual);
        out.ends.push(EndResidue { location: end.location, form: form.into(), residue, loop_residual: r.residual });
    }
    Ok(out)
}
