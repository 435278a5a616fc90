//! Adaptive Gauss–Kronrod (7/15) quadrature along polylines.

use super::analytic::AnalyticFn;
use super::contour::{segment_distance, Contour};
use super::C64;
use crate::error::{Result, WlabError};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default exclusion radius around declared singularities.
pub const POLE_GUARD: f64 = 1e-3;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// One GK15 panel on [a, b]: (Kronrod estimate, |K − G|, Σ w|f|).
fn gk15<F: Fn(C64) -> C64>(f: &F, a: C64, b: C64) -> (C64, f64, f64) {
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let fc = f(mid);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dz = half * XGK[j];
        let (f1, f2) = (f(mid - dz), f(mid + dz));
        k += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    (k * half, ((k - g) * half).norm(), abs * half.norm())
}

/// Adaptive integral of `f` along the straight segment [a, b] to absolute tolerance `tol`.
pub fn integrate_segment<F: Fn(C64) -> C64>(f: &F, a: C64, b: C64, tol: f64) -> Result<C64> {
    let (v, e, s) = gk15(f, a, b);
    let mut panels = vec![(a, b, v, e, s)];
    loop {
        let total: C64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let scale: f64 = panels.iter().map(|p| p.4).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(WlabError::SingularityOnPath(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol.max(1e-14 * scale) {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(WlabError::NoConvergence(format!("segment [{a}, {b}] error {err:e} > {tol:e}")));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (pa, pb, ..) = panels.swap_remove(idx);
        let pm = (pa + pb) * 0.5;
        let (v1, e1, s1) = gk15(f, pa, pm);
        let (v2, e2, s2) = gk15(f, pm, pb);
        panels.push((pa, pm, v1, e1, s1));
        panels.push((pm, pb, v2, e2, s2));
    }
}

/// Integrate a closure along directed segments; tolerance split by length, summed in segment order.
pub fn integrate_segments<F>(f: &F, segments: &[(C64, C64)], tol: f64) -> Result<C64>
where
    F: Fn(C64) -> C64 + Sync,
{
    let total_len: f64 = segments.iter().map(|(a, b)| (b - a).norm()).sum();
    if total_len == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let parts: Vec<Result<C64>> = segments
        .par_iter()
        .map(|&(a, b)| integrate_segment(f, a, b, tol * (b - a).norm() / total_len))
        .collect();
    let mut sum = C64::new(0.0, 0.0);
    for p in parts {
        sum += p?;
    }
    Ok(sum)
}

/// Check that no declared singularity of `f` lies within `guard` of the path.
pub fn check_guard(f: &AnalyticFn, segments: &[(C64, C64)], guard: f64) -> Result<()> {
    for s in f.singularities() {
        let d = segments
            .iter()
            .map(|&(a, b)| segment_distance(a, b, s.location))
            .fold(f64::INFINITY, f64::min);
        if d < guard {
            return Err(WlabError::SingularityOnPath(format!("{}", s.location)));
        }
    }
    Ok(())
}

/// ∫_c f dz with estimated error ≤ tol.
pub fn contour_integrate(f: &AnalyticFn, c: &Contour, tol: f64) -> Result<C64> {
    let segs = c.segments();
    check_guard(f, &segs, POLE_GUARD)?;
    integrate_segments(&|z| f.eval(z), &segs, tol)
}

/// (1/2πi)∮ f over the circle |z − z0| = r.
pub fn residue_at(f: &AnalyticFn, z0: C64, r: f64) -> Result<C64> {
    let others = f
        .singularities()
        .iter()
        .filter(|s| (s.location - z0).norm() < r && (s.location - z0).norm() > 1e-12 * (1.0 + r))
        .count();
    if others > 0 {
        return Err(WlabError::MultipleSingularities);
    }
    let c = Contour::circle(z0, r, 64);
    let segs = c.segments();
    let guarded: Vec<_> = f
        .singularities()
        .iter()
        .filter(|s| (s.location - z0).norm() > 1e-12 * (1.0 + r))
        .collect();
    for s in guarded {
        if c.distance_to(s.location) < POLE_GUARD {
            return Err(WlabError::SingularityOnPath(format!("{}", s.location)));
        }
    }
    let v = integrate_segments(&|z| f.eval(z), &segs, 1e-13)?;
    Ok(v / C64::new(0.0, 2.0 * PI))
}
