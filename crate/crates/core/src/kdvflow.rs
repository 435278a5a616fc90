//! KdV layer on vertical lines of the cylinder: the change of variables g ↦ u, the Schrödinger
//! factorisation y = g^{−1/2}, ETDRK4 evolution of the hierarchy, the coupled (g, u, y) flow,
//! pole tracking and the algebro-geometric rank test.

use crate::complexkit::{LineAxis, SampledLine, C64};
use crate::diffpoly::{flow_rhs, DiffPoly};
use crate::error::{Result, WlabError};
use crate::weierstrass::WeierstrassData;
use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const ZERO: C64 = C64::new(0.0, 0.0);

/// Gauge factor of the canonical flow ∂g/∂t = γ(g‴ − 3g′g″/g + (3/2)(g′)³/g²).
pub const CANONICAL_GAUGE: C64 = C64::new(0.0, 0.5);

// ---------------------------------------------------------------------------------------------
// pointwise change of variables

fn g_derivs(data: &WeierstrassData, z: C64, n: usize) -> Result<Vec<C64>> {
    if data.g.singular_distance(z) < 1e-9 {
        return Err(WlabError::SingularityOnLine);
    }
    let j = data.g.jet(z, n.max(1))?;
    let d: Vec<C64> = (0..=n.max(1)).map(|k| j.deriv(k)).collect();
    if !d.iter().all(|v| v.re.is_finite() && v.im.is_finite()) || d[0].norm() < 1e-12 * (1.0 + d[1].norm()) {
        return Err(WlabError::SingularityOnLine);
    }
    Ok(d)
}

/// u = −3(g′)²/(4g²) + g″/(2g) at a point.
pub fn u_at(data: &WeierstrassData, z: C64) -> Result<C64> {
    let d = g_derivs(data, z, 2)?;
    let x = d[1] / d[0];
    Ok(-0.75 * x * x + 0.5 * d[2] / d[0])
}

fn untwisted(line: &SampledLine) -> SampledLine {
    line.clone().with_twist(ZERO)
}

/// Samples of u on the line, from exact jets of g.
pub fn u_from_g(data: &WeierstrassData, line: &SampledLine) -> Result<SampledLine> {
    let vals = line.points().par_iter().map(|&z| u_at(data, z)).collect::<Result<Vec<_>>>()?;
    Ok(untwisted(line).with_values(vals))
}

/// Samples of the mKdV variable x = g′/g.
pub fn x_from_g(data: &WeierstrassData, line: &SampledLine) -> Result<SampledLine> {
    let vals = line
        .points()
        .par_iter()
        .map(|&z| g_derivs(data, z, 1).map(|d| d[1] / d[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(untwisted(line).with_values(vals))
}

/// max |u − (½x′ − ¼x²)|, with u from exact jets and x′ spectral.
pub fn miura_consistency(data: &WeierstrassData, line: &SampledLine) -> Result<f64> {
    let u = u_from_g(data, line)?;
    let x = x_from_g(data, line)?;
    let xp = crate::complexkit::spectral_derivative(&x, 1)?;
    Ok((0..u.n())
        .map(|j| (u.values[j] - (0.5 * xp.values[j] - 0.25 * x.values[j] * x.values[j])).norm())
        .fold(0.0, f64::max))
}

/// Net number of turns of the samples about 0 over one period.
pub fn winding(values: &[C64]) -> f64 {
    let n = values.len();
    (0..n).map(|j| (values[(j + 1) % n] / values[j]).arg()).sum::<f64>() / (2.0 * PI)
}

/// Continuous branch of g^{−1/2} along the line; anti-periodic (twist iπ) when g winds an odd number of times.
pub fn y_from_g_line(g: &SampledLine) -> Result<(SampledLine, i64)> {
    if g.values.iter().any(|v| v.norm() < 1e-300 || !v.re.is_finite() || !v.im.is_finite()) {
        return Err(WlabError::SingularityOnLine);
    }
    let w = winding(&g.values);
    let wi = w.round() as i64;
    if (w - wi as f64).abs() > 0.1 {
        return Err(WlabError::WindingNotInteger(w));
    }
    let mut ys = Vec::with_capacity(g.n());
    let mut prev: Option<C64> = None;
    for v in &g.values {
        let mut y = v.sqrt().inv();
        if let Some(p) = prev {
            if (y - p).norm() > (y + p).norm() {
                y = -y;
            }
        }
        ys.push(y);
        prev = Some(y);
    }
    let twist = if wi.rem_euclid(2) == 1 { c(0.0, PI) } else { ZERO };
    Ok((untwisted(g).with_values(ys).with_twist(twist), wi))
}

/// Outcome of the y″ + u y = 0 check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerReport {
    pub residual: f64,
    pub winding: i64,
    /// g winds an odd number of times; the anti-periodic branch was used.
    pub branch_obstruction: bool,
}

/// max |y″ + u y| along the line for y = g^{−1/2}.
pub fn schrodinger_check(data: &WeierstrassData, line: &SampledLine) -> Result<SchrodingerReport> {
    let gvals = line
        .points()
        .par_iter()
        .map(|&z| g_derivs(data, z, 0).map(|d| d[0]))
        .collect::<Result<Vec<_>>>()?;
    let (y, w) = y_from_g_line(&untwisted(line).with_values(gvals))?;
    let u = u_from_g(data, line)?;
    let ypp = crate::complexkit::spectral_derivative(&y, 2)?;
    let residual = (0..y.n())
        .map(|j| (ypp.values[j] + u.values[j] * y.values[j]).norm())
        .fold(0.0, f64::max);
    Ok(SchrodingerReport { residual, winding: w, branch_obstruction: y.twist != ZERO })
}

// ---------------------------------------------------------------------------------------------
// spectral machinery with cached plans

/// FFT plans and symbols for one line geometry.
#[derive(Clone)]
struct LineOps {
    template: SampledLine,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    untwist: Vec<C64>,
    dz: Vec<C64>,
    /// Modes with |k + shift| > N/3.
    high: Vec<bool>,
    zero_nyquist: bool,
}

impl LineOps {
    fn new(template: &SampledLine) -> Self {
        let n = template.n();
        let mut p = FftPlanner::new();
        let shift = template.twist.im / (2.0 * PI);
        let b = template.twist.im.rem_euclid(2.0 * PI);
        Self {
            template: template.with_values(vec![ZERO; n]),
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
            untwist: (0..n).map(|j| (-template.twist * (j as f64 / n as f64)).exp()).collect(),
            dz: (0..n).map(|j| template.dz_symbol(j)).collect(),
            high: (0..n).map(|j| (template.mode(j) as f64 + shift).abs() > n as f64 / 3.0).collect(),
            zero_nyquist: n.is_multiple_of(2) && b.min(2.0 * PI - b) < 1e-12,
        }
    }

    fn n(&self) -> usize {
        self.dz.len()
    }

    fn spec(&self, vals: &[C64]) -> Vec<C64> {
        let n = self.n() as f64;
        let mut buf: Vec<C64> = vals.iter().zip(&self.untwist).map(|(v, u)| v * u).collect();
        self.fwd.process(&mut buf);
        buf.iter_mut().for_each(|v| *v /= n);
        buf
    }

    fn phys(&self, spec: &[C64]) -> Vec<C64> {
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        buf.iter().zip(&self.untwist).map(|(v, u)| v / u).collect()
    }

    fn deriv_spec(&self, spec: &[C64], order: usize) -> Vec<C64> {
        let mut s: Vec<C64> = spec.iter().zip(&self.dz).map(|(v, d)| v * d.powu(order as u32)).collect();
        if self.zero_nyquist && order % 2 == 1 {
            s[self.n() / 2] = ZERO;
        }
        s
    }

    fn deriv(&self, spec: &[C64], order: usize) -> Vec<C64> {
        self.phys(&self.deriv_spec(spec, order))
    }

    fn dealias(&self, spec: &mut [C64]) {
        for (v, &h) in spec.iter_mut().zip(&self.high) {
            if h {
                *v = ZERO;
            }
        }
    }

    fn line(&self, vals: Vec<C64>) -> SampledLine {
        self.template.with_values(vals)
    }
}

/// ETDRK4 weights for one step size.
struct EtdCoeffs {
    e: Vec<Vec<C64>>,
    e2: Vec<Vec<C64>>,
    q: Vec<Vec<C64>>,
    f1: Vec<Vec<C64>>,
    f2: Vec<Vec<C64>>,
    f3: Vec<Vec<C64>>,
}

impl EtdCoeffs {
    /// Contour-averaged φ-functions for diagonal symbols `ls`.
    fn new(ls: &[Vec<C64>], h: f64) -> Self {
        const M: usize = 64;
        let roots: Vec<C64> = (0..M).map(|m| C64::from_polar(1.0, 2.0 * PI * (m as f64 + 0.5) / M as f64)).collect();
        let mut out = Self { e: vec![], e2: vec![], q: vec![], f1: vec![], f2: vec![], f3: vec![] };
        for l in ls {
            let (mut e, mut e2, mut q, mut f1, mut f2, mut f3) = (vec![], vec![], vec![], vec![], vec![], vec![]);
            for &lv in l {
                let z = lv * h;
                e.push(z.exp());
                e2.push((z * 0.5).exp());
                let (mut sq, mut s1, mut s2, mut s3) = (ZERO, ZERO, ZERO, ZERO);
                for r in &roots {
                    let w = z + r;
                    let ew = w.exp();
                    let w3 = w * w * w;
                    sq += ((w * 0.5).exp() - 1.0) / w;
                    s1 += (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w3;
                    s2 += (2.0 + w + ew * (w - 2.0)) / w3;
                    s3 += (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w3;
                }
                let m = M as f64;
                q.push(sq * h / m);
                f1.push(s1 * h / m);
                f2.push(s2 * h / m);
                f3.push(s3 * h / m);
            }
            out.e.push(e);
            out.e2.push(e2);
            out.q.push(q);
            out.f1.push(f1);
            out.f2.push(f2);
            out.f3.push(f3);
        }
        out
    }
}

type Spectra = Vec<Vec<C64>>;

fn etdrk4_step(v: &Spectra, k: &EtdCoeffs, nl: &dyn Fn(&Spectra) -> Result<Spectra>) -> Result<Spectra> {
    let comb = |f: &dyn Fn(usize, usize) -> C64| -> Spectra {
        v.iter().enumerate().map(|(i, vi)| (0..vi.len()).map(|j| f(i, j)).collect()).collect()
    };
    let nv = nl(v)?;
    let a = comb(&|i, j| k.e2[i][j] * v[i][j] + k.q[i][j] * nv[i][j]);
    let na = nl(&a)?;
    let b = comb(&|i, j| k.e2[i][j] * v[i][j] + k.q[i][j] * na[i][j]);
    let nb = nl(&b)?;
    let cc = comb(&|i, j| k.e2[i][j] * a[i][j] + k.q[i][j] * (2.0 * nb[i][j] - nv[i][j]));
    let nc = nl(&cc)?;
    Ok(comb(&|i, j| {
        k.e[i][j] * v[i][j] + k.f1[i][j] * nv[i][j] + 2.0 * k.f2[i][j] * (na[i][j] + nb[i][j]) + k.f3[i][j] * nc[i][j]
    }))
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn check_finite(v: &[C64], t: f64) -> Result<()> {
    if v.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        Ok(())
    } else {
        Err(WlabError::BlowupDetected(t))
    }
}

// ---------------------------------------------------------------------------------------------
// real KdV harness

/// ∮u and ∮u² over one period (real parts).
pub fn mass_and_energy(u: &SampledLine) -> (f64, f64) {
    let h = u.spacing();
    (
        u.values.iter().map(|v| v.re).sum::<f64>() * h,
        u.values.iter().map(|v| v.re * v.re).sum::<f64>() * h,
    )
}

/// ∂u/∂t = −u‴ − 6uu′ for real periodic data on a horizontal line, ETDRK4 with fixed step.
pub fn kdv_real_evolve(u0: &SampledLine, t_end: f64, dt: f64) -> Result<SampledLine> {
    if u0.axis != LineAxis::Horizontal || u0.twist != ZERO {
        return Err(WlabError::Precondition("the real harness needs an untwisted horizontal line".into()));
    }
    if u0.values.iter().any(|v| v.im.abs() > 1e-12 * (1.0 + v.re.abs())) {
        return Err(WlabError::Precondition("initial data must be real".into()));
    }
    if !(dt > 0.0) || t_end < 0.0 {
        return Err(WlabError::Precondition("need dt > 0 and T ≥ 0".into()));
    }
    let ops = LineOps::new(u0);
    let l: Vec<C64> = ops.dz.iter().map(|d| -d * d * d).collect();
    let steps = (t_end / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let coeffs = EtdCoeffs::new(&[l], h);
    let nl = |s: &Spectra| -> Result<Spectra> {
        let u = ops.phys(&s[0]);
        let sq: Vec<C64> = u.iter().map(|v| v * v).collect();
        let d = ops.deriv_spec(&ops.spec(&sq), 1);
        Ok(vec![d.iter().map(|v| -3.0 * v).collect()])
    };
    let cap = 1e3 * max_abs(&u0.values).max(1e-300);
    let mut v = vec![ops.spec(&u0.values)];
    for step in 0..steps {
        v = etdrk4_step(&v, &coeffs, &nl)?;
        let mut u = ops.phys(&v[0]);
        u.iter_mut().for_each(|x| x.im = 0.0);
        let t = (step + 1) as f64 * h;
        check_finite(&u, t)?;
        if max_abs(&u) > cap {
            return Err(WlabError::BlowupDetected(t));
        }
        v = vec![ops.spec(&u)];
    }
    Ok(ops.line(ops.phys(&v[0])))
}

// ---------------------------------------------------------------------------------------------
// hierarchy flows

fn flow_split(n: usize) -> Result<(DiffPoly, usize)> {
    let top = 2 * n + 1;
    // −∂𝒫_{n+1} = −u^(2n+1) + lower
    Ok((flow_rhs(n)?.add(&DiffPoly::u(top as u32)), top))
}

/// −∂_z 𝒫_{n+1}(u) on the line with spectral jets.
pub fn hierarchy_rhs(u: &SampledLine, n: usize) -> Result<SampledLine> {
    let f = flow_rhs(n)?;
    let jets = u.dz_jets(2 * n + 1);
    Ok(u.with_values(f.evaluate(&jets)?))
}

/// Evolves u along the n-th hierarchy flow for time `t_end` (ETDRK4, linear part −∂^{2n+1}).
///
/// On vertical lines the symbol of ∂ is real, so only n = 0 is stable there.
pub fn evolve_flow(u0: &SampledLine, n: usize, t_end: f64, dt: f64) -> Result<SampledLine> {
    if !(dt > 0.0) {
        return Err(WlabError::Precondition("need dt > 0".into()));
    }
    let (rest, top) = flow_split(n)?;
    let ops = LineOps::new(u0);
    let l: Vec<C64> = ops.dz.iter().map(|d| -d.powu(top as u32)).collect();
    let steps = (t_end.abs() / dt).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let coeffs = EtdCoeffs::new(&[l], h);
    let order = rest.max_order().map(|k| k as usize).unwrap_or(0);
    let nl = |s: &Spectra| -> Result<Spectra> {
        if rest.is_zero() {
            return Ok(vec![vec![ZERO; s[0].len()]]);
        }
        let jets: Vec<Vec<C64>> = (0..=order).map(|k| ops.deriv(&s[0], k)).collect();
        Ok(vec![ops.spec(&rest.evaluate(&jets)?)])
    };
    let mut v = vec![ops.spec(&u0.values)];
    for step in 0..steps {
        v = etdrk4_step(&v, &coeffs, &nl)?;
        check_finite(&v[0], (step + 1) as f64 * h)?;
    }
    Ok(u0.with_values(ops.phys(&v[0])))
}

// ---------------------------------------------------------------------------------------------
// algebro-geometric rank

/// A lowest-order linear relation among the flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgDependency {
    /// ∂u/∂t_n lies in the span of the lower flows.
    pub n: usize,
    /// Coefficients c₀..c_{n−1} of ∂u/∂t_n ≈ Σ c_j ∂u/∂t_j.
    pub coefficients: Vec<C64>,
    /// ‖F_n − Σ c_j F_j‖ relative to the natural size of F_n.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgRank {
    pub rank: usize,
    /// Singular values of the column-normalised flow matrix (zero columns contribute 0).
    pub singular_values: Vec<f64>,
    pub flow_norms: Vec<f64>,
    pub dependency: Option<AgDependency>,
}

const AG_THRESHOLD: f64 = 1e-8;

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn numerical_rank(cols: &[Vec<C64>]) -> (usize, Vec<f64>) {
    if cols.is_empty() {
        return (0, vec![]);
    }
    let m = DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let s1 = sv.first().copied().unwrap_or(0.0);
    let r = if s1 == 0.0 { 0 } else { sv.iter().filter(|&&s| s > AG_THRESHOLD * s1).count() };
    (r, sv)
}

fn least_squares(cols: &[Vec<C64>], rhs: &[C64]) -> Vec<C64> {
    if cols.is_empty() {
        return vec![];
    }
    let m = DMatrix::from_fn(rhs.len(), cols.len(), |i, j| cols[j][i]);
    let b = DMatrix::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let svd = m.svd(true, true);
    let s1 = svd.singular_values.iter().copied().fold(0.0, f64::max);
    match svd.solve(&b, AG_THRESHOLD * s1) {
        Ok(x) => x.iter().copied().collect(),
        Err(_) => vec![ZERO; cols.len()],
    }
}

/// Rank of the flow samples [∂u/∂t₀ … ∂u/∂t_{n_max}] and the first linear dependency.
///
/// Jets come from the spectrum with modes below 1e−13 of the largest removed. A flow counts as zero
/// when its norm is below 1e−8 of ‖∂²F_{n−1}‖ (or of ‖u‖·2π/period for n = 0); other columns are
/// normalised before the SVD, threshold 1e−8·σ₁.
pub fn algebro_geometric_rank(u: &SampledLine, n_max: usize) -> Result<AgRank> {
    if !(1..=5).contains(&n_max) {
        return Err(WlabError::Precondition(format!("n_max = {n_max} outside 1..5")));
    }
    let ops = LineOps::new(u);
    let mut spec = ops.spec(&u.values);
    let top = max_abs(&spec);
    spec.iter_mut().for_each(|v| {
        if v.norm() < 1e-13 * top {
            *v = ZERO
        }
    });
    let jets: Vec<Vec<C64>> = (0..=2 * n_max + 3).map(|k| ops.deriv(&spec, k)).collect();
    let flows: Vec<Vec<C64>> = (0..=n_max)
        .map(|n| flow_rhs(n).and_then(|f| f.evaluate(&jets)))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = flows.iter().map(|f| norm2(f)).collect();
    let natural: Vec<f64> = (0..=n_max)
        .map(|n| {
            if n == 0 {
                norm2(&u.values) * 2.0 * PI / u.period
            } else {
                norm2(&ops.deriv(&ops.spec(&flows[n - 1]), 2))
            }
        })
        .collect();
    let zero: Vec<bool> = (0..=n_max).map(|n| norms[n] <= AG_THRESHOLD * natural[n]).collect();
    let scaled: Vec<Vec<C64>> = (0..=n_max)
        .map(|n| {
            if zero[n] {
                vec![ZERO; flows[n].len()]
            } else {
                flows[n].iter().map(|v| v / norms[n]).collect()
            }
        })
        .collect();
    let (rank, singular_values) = numerical_rank(&scaled);
    let mut dependency = None;
    let mut prev_rank = 0;
    for n in 0..=n_max {
        let (r, _) = numerical_rank(&scaled[..=n]);
        if r == prev_rank {
            let coefficients = least_squares(&flows[..n], &flows[n]);
            let mut res = flows[n].clone();
            for (cj, fj) in coefficients.iter().zip(&flows[..n]) {
                res.iter_mut().zip(fj).for_each(|(a, b)| *a -= cj * b);
            }
            let residual = norm2(&res) / norms[n].max(natural[n]).max(1e-300);
            dependency = Some(AgDependency { n, coefficients, residual });
            break;
        }
        prev_rank = r;
    }
    Ok(AgRank { rank, singular_values, flow_norms: norms, dependency })
}

/// −2℘ for the lattice with periods i and ∞: −2π²/sinh²(π(z − z₀)) − 2π²/3, an i-periodic potential
/// whose second flow vanishes identically.
pub fn degenerate_lame(z: C64, z0: C64) -> C64 {
    let s = (PI * (z - z0)).sinh();
    -2.0 * PI * PI / (s * s) - 2.0 * PI * PI / 3.0
}

// ---------------------------------------------------------------------------------------------
// pole tracking

/// One tracked pole at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleSample {
    pub t: f64,
    pub z0: C64,
    pub c_minus2: C64,
}

/// Tracked poles: `poles[k]` is the history of the k-th seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoleTrack {
    pub poles: Vec<Vec<PoleSample>>,
}

impl PoleTrack {
    /// Largest |c₋₂ + 2| over all samples.
    pub fn max_c2_deviation(&self) -> f64 {
        self.poles.iter().flatten().map(|p| (p.c_minus2 + 2.0).norm()).fold(0.0, f64::max)
    }

    /// Largest change of z_b − z_a over the track of poles a and b.
    pub fn spacing_drift(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (&self.poles[a], &self.poles[b]);
        let d0 = pb[0].z0 - pa[0].z0;
        pa.iter().zip(pb).map(|(x, y)| (y.z0 - x.z0 - d0).norm()).fold(0.0, f64::max)
    }
}

fn circle_coeffs(f: &dyn Fn(C64) -> Result<C64>, center: C64, rho: f64, m: usize, fft: &dyn Fft<f64>) -> Result<Vec<C64>> {
    let mut buf = (0..m)
        .map(|j| f(center + C64::from_polar(rho, 2.0 * PI * j as f64 / m as f64)))
        .collect::<Result<Vec<_>>>()?;
    fft.process(&mut buf);
    buf.iter_mut().for_each(|v| *v /= m as f64);
    Ok(buf)
}

/// Newton refinement of a double pole of `f` from `seed` using c₋₃/(2c₋₂) on circles of radius `rho`.
pub fn locate_pole(f: &dyn Fn(C64) -> Result<C64>, seed: C64, rho: f64, t: f64) -> Result<(C64, C64)> {
    const M: usize = 64;
    let fft = FftPlanner::new().plan_fft_forward(M);
    let mut z = seed;
    let mut c2 = ZERO;
    for _ in 0..40 {
        let b = circle_coeffs(f, z, rho, M, fft.as_ref())?;
        c2 = b[M - 2] * rho * rho;
        let c3 = b[M - 3] * rho * rho * rho;
        if c2.norm() < 1e-8 {
            return Err(WlabError::TrackLost(t));
        }
        let delta = c3 / (2.0 * c2);
        z += delta;
        if (z - seed).norm() > 0.5 * rho || !z.re.is_finite() {
            return Err(WlabError::TrackLost(t));
        }
        if delta.norm() < 1e-14 * (1.0 + z.norm()) {
            break;
        }
    }
    Ok((z, c2))
}

/// Follows a double pole of the family `u(t, z)` over `times`, starting from `seed`.
pub fn pole_propagation(
    family: &dyn Fn(f64, C64) -> Result<C64>,
    times: &[f64],
    seed: C64,
    radius: f64,
) -> Result<Vec<PoleSample>> {
    let mut z = seed;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let f = |w: C64| family(t, w);
        let (z1, c2) = locate_pole(&f, z, radius, t)?;
        z = z1;
        out.push(PoleSample { t, z0: z, c_minus2: c2 });
    }
    Ok(out)
}

/// Location and c₋₂ of the one double pole of u inside the strip between two vertical lines of period 1.
/// With w_k = e^{2πk(z−e)}, the boundary moments M_k = (1/2πi)∮u w_k dz equal c₋₂ w_k′(p), so
/// e^{2π(p−e)} = M₂/(2M₁) and c₋₂ = M₁/(2π e^{2π(p−e)}).
pub fn strip_pole(left: &SampledLine, right: &SampledLine, guess: C64, t: f64) -> Result<(C64, C64)> {
    let moment = |k: f64| {
        let w = |l: &SampledLine| {
            let vals = (0..l.n()).map(|j| l.values[j] * (2.0 * PI * k * (l.point(j) - guess)).exp()).collect();
            l.with_values(vals).integral_dz()
        };
        (w(right) - w(left)) / c(0.0, 2.0 * PI)
    };
    let (m1, m2) = (moment(1.0), moment(2.0));
    if m1.norm() < 1e-12 || !m1.re.is_finite() || !m2.re.is_finite() {
        return Err(WlabError::TrackLost(t));
    }
    let e = m2 / (2.0 * m1);
    let pole = guess + e.ln() / (2.0 * PI);
    if pole.re <= left.offset || pole.re >= right.offset {
        return Err(WlabError::TrackLost(t));
    }
    Ok((pole, m1 / (2.0 * PI * e)))
}

/// A zero of g with the half-width of the strip used to track the pole of u there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleSeed {
    pub z: C64,
    pub half_width: f64,
}

/// A tracked pole of u with the two evolving lines bounding its strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleStrip {
    pub left: SampledLine,
    pub right: SampledLine,
    pub pole: C64,
    pub c_minus2: C64,
}

impl PoleStrip {
    fn new(data: &WeierstrassData, seed: &PoleSeed, n: usize) -> Result<Self> {
        let line = |x: f64| u_from_g(data, &SampledLine::vertical(x, n, 1.0, |_| ZERO));
        let left = line(seed.z.re - seed.half_width)?;
        let right = line(seed.z.re + seed.half_width)?;
        let (pole, c_minus2) = strip_pole(&left, &right, seed.z, 0.0)?;
        Ok(Self { left, right, pole, c_minus2 })
    }

    fn relocate(&mut self, t: f64) -> Result<()> {
        let (p, c2) = strip_pole(&self.left, &self.right, self.pole, t)?;
        self.pole = p;
        self.c_minus2 = c2;
        Ok(())
    }
}

// ---------------------------------------------------------------------------------------------
// the coupled Shiffman flow

/// Knobs for [`shiffman_evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub gauge: C64,
    /// Step-halving acceptance on the relative local error.
    pub tol: f64,
    pub min_dt: f64,
    /// Zero the top third of the spectrum of nonlinear terms.
    pub dealias: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { gauge: CANONICAL_GAUGE, tol: 1e-8, min_dt: 1e-9, dealias: true }
    }
}

/// The evolving line data: direct g, u, and y = g^{−1/2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub g: SampledLine,
    pub u: SampledLine,
    pub y: Option<SampledLine>,
    /// (∮dz/g, ∮g dz) at t = 0.
    pub conserved: [C64; 2],
    pub strips: Vec<PoleStrip>,
}

/// Zeros of g (poles of u) declared as ends within `reach` of the line Re z = x0, one per period. The
/// strip half-width is half the horizontal distance to the nearest other declared end.
pub fn pole_seeds(data: &WeierstrassData, x0: f64, reach: f64) -> Vec<PoleSeed> {
    let ends: Vec<(C64, i32)> = data.ends.iter().filter_map(|e| e.location.map(|z| (z, e.g_order))).collect();
    let mut out: Vec<PoleSeed> = ends
        .iter()
        .filter(|(z, o)| *o > 0 && (z.re - x0).abs() <= reach && z.im >= -1e-12 && z.im < 1.0 - 1e-12)
        .map(|&(z, _)| {
            let gap = ends
                .iter()
                .map(|(w, _)| (w.re - z.re).abs())
                .filter(|d| *d > 1e-9)
                .fold(f64::INFINITY, f64::min);
            PoleSeed { z, half_width: if gap.is_finite() { 0.5 * gap } else { 0.25 } }
        })
        .collect();
    out.sort_by(|a, b| a.z.re.total_cmp(&b.z.re));
    out
}

impl FlowState {
    /// Initial state on the vertical line Re z = x0 (period 1) with `n` samples, tracking the poles at `seeds`.
    pub fn from_data(data: &WeierstrassData, x0: f64, n: usize, seeds: &[PoleSeed]) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(WlabError::Precondition("sample count must be a power of two".into()));
        }
        let line = SampledLine::vertical(x0, n, 1.0, |_| ZERO);
        let gvals = line
            .points()
            .par_iter()
            .map(|&z| g_derivs(data, z, 0).map(|d| d[0]))
            .collect::<Result<Vec<_>>>()?;
        let g = line.with_values(gvals);
        let u = u_from_g(data, &line)?;
        let (y, _) = y_from_g_line(&g)?;
        for l in [&g, &u, &y] {
            let e = l.top_third_energy();
            if e > 1e-8 {
                return Err(WlabError::AliasingDetected(e));
            }
        }
        let strips = seeds.iter().map(|s| PoleStrip::new(data, s, n)).collect::<Result<Vec<_>>>()?;
        let mut s = Self { t: 0.0, g, u, y: Some(y), conserved: [ZERO; 2], strips };
        s.conserved = s.periods();
        s.check_poles(0.0)?;
        Ok(s)
    }

    /// (∮dz/g, ∮g dz) along the line for the current direct-route g.
    pub fn periods(&self) -> [C64; 2] {
        let inv = self.g.with_values(self.g.values.iter().map(|v| v.inv()).collect());
        [inv.integral_dz(), self.g.integral_dz()]
    }

    /// Flux vector Im ∮ (½(1/g − g), (i/2)(1/g + g), 1) dz.
    pub fn flux(&self) -> [f64; 3] {
        let [a, b] = self.periods();
        let dz = self.g.with_values(vec![c(1.0, 0.0); self.g.n()]).integral_dz();
        [(0.5 * (a - b)).im, (c(0.0, 0.5) * (a + b)).im, dz.im]
    }

    fn check_poles(&self, t: f64) -> Result<()> {
        let h = self.g.spacing();
        for s in &self.strips {
            let d = [self.g.offset, s.left.offset, s.right.offset]
                .iter()
                .map(|x| (s.pole.re - x).abs())
                .fold(f64::INFINITY, f64::min);
            if d < 2.0 * h {
                return Err(WlabError::PoleCollision { t, distance: d });
            }
        }
        Ok(())
    }
}

/// Per-step diagnostics of the coupled flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: f64,
    pub dt: f64,
    pub period_dz_over_g: C64,
    pub period_g_dz: C64,
    /// max |conserved − initial| / max(1, |initial|) over the two periods.
    pub period_drift: f64,
    pub flux: [f64; 3],
    /// max |g − y⁻²| / max |g|.
    pub route_discrepancy: f64,
    /// max |u(g) − u| / max |u| with u(g) from spectral derivatives of g.
    pub gauge_consistency: f64,
    /// |∮ġ/g² dz| and |∮ġ dz|.
    pub kernel: [f64; 2],
    pub poles: Vec<C64>,
    pub c_minus2: Vec<C64>,
}

/// Final state, pole histories and step log of a flow run.
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub state: FlowState,
    pub track: PoleTrack,
    pub log: Vec<StepLog>,
}

struct Coupled {
    /// φ = log g − 2πw z, untwisted.
    phi: LineOps,
    u: LineOps,
    y: LineOps,
    /// Left and right bounding lines of each tracked strip.
    flanks: Vec<LineOps>,
    w: f64,
    x0: C64,
    gauge: C64,
    dealias: bool,
    d2y: DMatrix<C64>,
    cache: HashMap<u64, Arc<EtdCoeffs>>,
}

/// Continuous log g − 2πw z along the line, with w the winding of g.
fn log_g_periodic(g: &SampledLine) -> Result<(Vec<C64>, f64)> {
    let w = winding(&g.values).round();
    let mut arg = g.values[0].arg();
    let mut out = Vec::with_capacity(g.n());
    for (j, v) in g.values.iter().enumerate() {
        if j > 0 {
            arg += (v / g.values[j - 1]).arg();
        }
        out.push(c(v.norm().ln(), arg) - 2.0 * PI * w * g.point(j));
    }
    Ok((out, w))
}

impl Coupled {
    fn new(state: &FlowState, y: &SampledLine, opts: &FlowOptions) -> Self {
        let yops = LineOps::new(y);
        let n = y.n();
        let mut d2y = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![ZERO; n];
            e[j] = c(1.0, 0.0);
            let col = yops.deriv(&yops.spec(&e), 2);
            for i in 0..n {
                d2y[(i, j)] = col[i];
            }
        }
        let (_, w) = log_g_periodic(&state.g).unwrap_or((vec![], 0.0));
        Self {
            phi: LineOps::new(&untwisted(&state.g)),
            u: LineOps::new(&state.u),
            y: yops,
            flanks: state.strips.iter().flat_map(|s| [LineOps::new(&s.left), LineOps::new(&s.right)]).collect(),
            w,
            x0: state.g.point(0),
            gauge: opts.gauge,
            dealias: opts.dealias,
            d2y,
            cache: HashMap::new(),
        }
    }

    fn symbols(&self) -> Vec<Vec<C64>> {
        let cube = |ops: &LineOps| -> Vec<C64> { ops.dz.iter().map(|d| self.gauge * d * d * d).collect() };
        let mut out = vec![cube(&self.phi), cube(&self.u), vec![ZERO; self.y.n()]];
        out.extend(self.flanks.iter().map(cube));
        out
    }

    fn coeffs(&mut self, h: f64) -> Arc<EtdCoeffs> {
        if let Some(c) = self.cache.get(&h.to_bits()) {
            return c.clone();
        }
        let c = Arc::new(EtdCoeffs::new(&self.symbols(), h));
        self.cache.insert(h.to_bits(), c.clone());
        c
    }

    /// x = g′/g from the φ spectrum.
    fn x(&self, s: &[C64]) -> Vec<C64> {
        self.phi.deriv(s, 1).into_iter().map(|v| v + 2.0 * PI * self.w).collect()
    }

    fn g_values(&self, s: &[C64]) -> Vec<C64> {
        let phi = self.phi.phys(s);
        let h = self.phi.template.spacing();
        (0..phi.len())
            .map(|j| (phi[j] + 2.0 * PI * self.w * (self.x0 + c(0.0, h * j as f64))).exp())
            .collect()
    }

    /// −½γx³, 6γuu′, −γ(u′y − 2uy′).
    fn nonlinear(&self, s: &Spectra) -> Result<Spectra> {
        let gm = self.gauge;
        let x = self.x(&s[0]);
        let (u, u1) = (self.u.phys(&s[1]), self.u.deriv(&s[1], 1));
        let (y, y1) = (self.y.phys(&s[2]), self.y.deriv(&s[2], 1));
        let nphi: Vec<C64> = x.iter().map(|x| -0.5 * gm * x * x * x).collect();
        let nu: Vec<C64> = (0..u.len()).map(|j| 6.0 * gm * u[j] * u1[j]).collect();
        let ny: Vec<C64> = (0..y.len()).map(|j| -gm * (u1[j] * y[j] - 2.0 * u[j] * y1[j])).collect();
        let mut out = vec![self.phi.spec(&nphi), self.u.spec(&nu), self.y.spec(&ny)];
        for (k, ops) in self.flanks.iter().enumerate() {
            let (f, f1) = (ops.phys(&s[3 + k]), ops.deriv(&s[3 + k], 1));
            let nf: Vec<C64> = (0..f.len()).map(|j| 6.0 * gm * f[j] * f1[j]).collect();
            out.push(ops.spec(&nf));
        }
        if self.dealias {
            self.phi.dealias(&mut out[0]);
            self.u.dealias(&mut out[1]);
            self.y.dealias(&mut out[2]);
            for (k, ops) in self.flanks.iter().enumerate() {
                ops.dealias(&mut out[3 + k]);
            }
        }
        Ok(out)
    }

    fn step(&mut self, v: &Spectra, h: f64) -> Result<Spectra> {
        let k = self.coeffs(h);
        let this = &*self;
        etdrk4_step(v, &k, &|s| this.nonlinear(s))
    }

    /// Projects y onto the kernel of ∂² + u (anti-periodic basis), keeping its component there.
    fn project_y(&self, y: &[C64], u: &[C64]) -> Result<Vec<C64>> {
        let mut m = self.d2y.clone();
        for (i, ui) in u.iter().enumerate() {
            m[(i, i)] += ui;
        }
        let b = DMatrix::from_column_slice(y.len(), 1, y);
        let z = m.lu().solve(&b).ok_or(WlabError::NoConvergence("Schrödinger kernel".into()))?;
        let zz: C64 = z.iter().map(|v| v.norm_sqr()).sum::<f64>().into();
        let zy: C64 = z.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
        if zz.re == 0.0 || !zz.re.is_finite() {
            return Err(WlabError::NoConvergence("Schrödinger kernel".into()));
        }
        Ok(z.iter().map(|v| v * zy / zz).collect())
    }

    fn rel_diff(&self, a: &Spectra, b: &Spectra) -> f64 {
        let ga = self.g_values(&a[0]);
        let gb = self.g_values(&b[0]);
        let rel = |pa: &[C64], pb: &[C64]| {
            pa.iter().zip(pb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / max_abs(pb).max(1e-300)
        };
        let mut e = rel(&ga, &gb)
            .max(rel(&self.u.phys(&a[1]), &self.u.phys(&b[1])))
            .max(rel(&self.y.phys(&a[2]), &self.y.phys(&b[2])));
        for (k, ops) in self.flanks.iter().enumerate() {
            e = e.max(rel(&ops.phys(&a[3 + k]), &ops.phys(&b[3 + k])));
        }
        e
    }
}

fn step_diagnostics(state: &FlowState, dt: f64, sys: &Coupled, phi: &[C64]) -> StepLog {
    let [a, b] = state.periods();
    let [a0, b0] = state.conserved;
    let period_drift = ((a - a0).norm() / a0.norm().max(1.0)).max((b - b0).norm() / b0.norm().max(1.0));
    let g = &state.g.values;
    let route_discrepancy = state
        .y
        .as_ref()
        .map(|y| {
            let d = y.values.iter().zip(g).map(|(y, g)| (g - (y * y).inv()).norm()).fold(0.0, f64::max);
            d / max_abs(g)
        })
        .unwrap_or(0.0);
    let x = sys.x(phi);
    let x1 = sys.phi.deriv(phi, 2);
    let x2 = sys.phi.deriv(phi, 3);
    // u(g) = ½x′ − ¼x²
    let gauge_consistency = (0..g.len())
        .map(|j| (0.5 * x1[j] - 0.25 * x[j] * x[j] - state.u.values[j]).norm())
        .fold(0.0, f64::max)
        / state.u.max_abs().max(1e-300);
    // ġ = g γ(x″ − ½x³)
    let gdot: Vec<C64> = (0..g.len()).map(|j| g[j] * sys.gauge * (x2[j] - 0.5 * x[j] * x[j] * x[j])).collect();
    let k1 = state.g.with_values(gdot.iter().zip(g).map(|(d, g)| d / (g * g)).collect()).integral_dz();
    let k2 = state.g.with_values(gdot).integral_dz();
    StepLog {
        t: state.t,
        dt,
        period_dz_over_g: a,
        period_g_dz: b,
        period_drift,
        flux: state.flux(),
        route_discrepancy,
        gauge_consistency,
        kernel: [k1.norm(), k2.norm()],
        poles: state.strips.iter().map(|s| s.pole).collect(),
        c_minus2: state.strips.iter().map(|s| s.c_minus2).collect(),
    }
}

/// Integrates the Shiffman flow on the line for t ∈ [0, T] along three routes: g directly (through
/// φ = log g − 2πwz, which obeys φ_t = γ(φ‴ − ½(φ′ + 2πw)³)), u by the gauged KdV equation, and y by
/// ∂y/∂t = −γ(u′y − 2uy′) followed by projection onto the anti-periodic kernel of ∂² + u. Steps start at
/// `dt` and are halved until two half steps agree with one full step to `opts.tol`.
pub fn shiffman_evolve(state: FlowState, t_end: f64, dt: f64, opts: &FlowOptions) -> Result<FlowOutcome> {
    if !(dt > 0.0) || t_end < 0.0 {
        return Err(WlabError::Precondition("need dt > 0 and T ≥ 0".into()));
    }
    let y0 = state.y.clone().ok_or_else(|| WlabError::Precondition("flow state needs y".into()))?;
    let mut sys = Coupled::new(&state, &y0, opts);
    let (phi0, _) = log_g_periodic(&state.g)?;
    let cap = 1e3 * state.u.max_abs().max(state.g.max_abs());
    let mut state = state;
    let mut v: Spectra = vec![sys.phi.spec(&phi0), sys.u.spec(&state.u.values), sys.y.spec(&y0.values)];
    for (k, l) in state.strips.iter().flat_map(|s| [&s.left, &s.right]).enumerate() {
        v.push(sys.flanks[k].spec(&l.values));
    }
    let mut track = PoleTrack {
        poles: state.strips.iter().map(|s| vec![PoleSample { t: state.t, z0: s.pole, c_minus2: s.c_minus2 }]).collect(),
    };
    let mut log = vec![step_diagnostics(&state, 0.0, &sys, &v[0])];
    let t_stop = state.t + t_end;
    let mut h = dt;
    while state.t < t_stop - 1e-15 {
        let h_try = h.min(t_stop - state.t);
        let full = sys.step(&v, h_try)?;
        let half = sys.step(&v, 0.5 * h_try)?;
        let half = sys.step(&half, 0.5 * h_try)?;
        let err = sys.rel_diff(&full, &half);
        if !(err <= opts.tol) {
            h = 0.5 * h_try;
            if h < opts.min_dt {
                return Err(WlabError::NoConvergence(format!("step size below {} at t = {}", opts.min_dt, state.t)));
            }
            continue;
        }
        v = half;
        let t = state.t + h_try;
        let u = sys.u.phys(&v[1]);
        let y = sys.project_y(&sys.y.phys(&v[2]), &u)?;
        v[2] = sys.y.spec(&y);
        for (k, s) in state.strips.iter_mut().enumerate() {
            s.left = sys.flanks[2 * k].line(sys.flanks[2 * k].phys(&v[3 + 2 * k]));
            s.right = sys.flanks[2 * k + 1].line(sys.flanks[2 * k + 1].phys(&v[4 + 2 * k]));
            s.relocate(t)?;
        }
        state.t = t;
        state.g = sys.phi.line(sys.g_values(&v[0]));
        state.u = sys.u.line(u);
        state.y = Some(sys.y.line(y));
        for l in [&state.g, &state.u] {
            check_finite(&l.values, t)?;
            if l.max_abs() > cap {
                return Err(WlabError::BlowupDetected(t));
            }
        }
        if state.g.values.iter().any(|x| x.norm() < 1e-8) {
            return Err(WlabError::SingularityOnLine);
        }
        state.check_poles(t)?;
        for (k, s) in state.strips.iter().enumerate() {
            track.poles[k].push(PoleSample { t, z0: s.pole, c_minus2: s.c_minus2 });
        }
        log.push(step_diagnostics(&state, h_try, &sys, &v[0]));
        if err < opts.tol / 64.0 {
            h = (2.0 * h_try).min(dt);
        }
    }
    Ok(FlowOutcome { state, track, log })
}
