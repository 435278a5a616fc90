use crate::complexkit::{AnalyticFn, Contour, Singularity, C64};
use crate::error::{Result, WlabError};
use crate::weierstrass::{
    period_report, translation_period, Chart, ChartPath, ChartPoint, DeclaredEnd, EndKind, WeierstrassData,
    PATH_TOL,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which ray A lies on: A ∈ ℝ or A ∈ iℝ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiemannBranch {
    Real,
    Imaginary,
}

/// Parameters of M_λ: curve w² = z(z−λ)(λz+1), g = z, dh = A dz/w.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannExampleParams {
    pub lambda: f64,
    pub a: C64,
    pub branch: RiemannBranch,
    /// 0, λ, −1/λ and ∞ (as `None`).
    pub branch_points: Vec<Option<C64>>,
    /// Real intervals [0, λ] and (−∞, −1/λ].
    pub cuts: Vec<(f64, f64)>,
    /// ℝ³ translation Re ∮_β Φ.
    pub translation: [f64; 3],
    /// Horizontal section: a loop around the cut [0, λ] on sheet +1.
    pub alpha: ChartPath,
    /// Loop around the branch points −1/λ and 0, changing sheet at both cuts.
    pub beta: ChartPath,
    /// ∮_β dh; the second period of g in the dh = dz chart.
    pub omega: f64,
    pub residual: f64,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// w on sheet +1: z·√(1 − λ/z)·√(λz + 1) with principal roots.
fn w_principal(z: C64, lambda: f64) -> C64 {
    z * (1.0 - lambda / z).sqrt() * (lambda * z + 1.0).sqrt()
}

fn elliptic_data(lambda: f64, a: C64) -> WeierstrassData {
    let sing = |x: f64| Singularity { location: c(x, 0.0), order: 0 };
    WeierstrassData {
        name: format!("riemann:λ={lambda}"),
        g: crate::complexkit::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        phi: AnalyticFn::new(move |z| a / w_principal(z, lambda))
            .with_singularities(vec![sing(0.0), sing(lambda), sing(-1.0 / lambda)]),
        chart: Chart::EllipticDoubleCover { lambda },
        base_point: ChartPoint::new(c(0.0, 1.0)),
        base_position: [0.0; 3],
        ends: vec![
            DeclaredEnd { location: Some(c(0.0, 0.0)), kind: EndKind::Planar, g_order: 2 },
            DeclaredEnd { location: None, kind: EndKind::Planar, g_order: -2 },
        ],
    }
}

fn cycles(lambda: f64) -> (ChartPath, ChartPath) {
    let d = 0.5 * lambda.min(1.0 / lambda);
    let alpha = ChartPath::on_sheet(Contour::circle(c(0.5 * lambda, 0.0), 0.5 * lambda + d, 128), 1);
    let cb = c(-0.5 / lambda, 0.0);
    let rb = 0.5 / lambda + d;
    let mut beta = ChartPath::on_sheet(Contour::arc(cb, rb, 0.0, PI, 64), 1);
    beta.push(Contour::arc(cb, rb, PI, 2.0 * PI, 64), -1);
    (alpha, beta)
}

/// Builds M_λ on the elliptic double cover, closing the periods by the choice of A.
pub fn make_riemann(lambda: f64) -> Result<(WeierstrassData, RiemannExampleParams)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(WlabError::Precondition("λ must be positive".into()));
    }
    let (alpha, beta) = cycles(lambda);
    let unit = elliptic_data(lambda, c(1.0, 0.0));
    let i_alpha = unit.path_integrals(&alpha, PATH_TOL)?[2];
    if i_alpha.norm() == 0.0 {
        return Err(WlabError::PeriodSolveFailed("degenerate α period".into()));
    }
    // the closure conditions are homogeneous in A: test each ray, then fix |A| by ∮_α dh = i
    let mut best: Option<(RiemannBranch, f64)> = None;
    for (branch, a) in [(RiemannBranch::Real, c(1.0, 0.0)), (RiemannBranch::Imaginary, c(0.0, 1.0))] {
        let r = period_report(&elliptic_data(lambda, a), std::slice::from_ref(&alpha))?.residual / i_alpha.norm();
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((branch, r));
        }
    }
    let (branch, rel) = best.expect("two branches tried");
    if rel > 1e-6 {
        return Err(WlabError::PeriodSolveFailed(format!("relative residual {rel:e} on both rays")));
    }
    let raw = c(0.0, 1.0) / i_alpha;
    let a = match branch {
        RiemannBranch::Real => c(raw.re, 0.0),
        RiemannBranch::Imaginary => c(0.0, raw.im),
    };
    let data = elliptic_data(lambda, a);
    let report = period_report(&data, std::slice::from_ref(&alpha))?;
    if report.residual >= 1e-8 {
        return Err(WlabError::PeriodSolveFailed(format!("residual {:e}", report.residual)));
    }
    let translation = translation_period(&data, &beta)?;
    let omega = data.path_integrals(&beta, PATH_TOL)?[2].re;
    let params = RiemannExampleParams {
        lambda,
        a,
        branch,
        branch_points: vec![Some(c(0.0, 0.0)), Some(c(lambda, 0.0)), Some(c(-1.0 / lambda, 0.0)), None],
        cuts: vec![(0.0, lambda), (f64::NEG_INFINITY, -1.0 / lambda)],
        translation,
        alpha,
        beta,
        omega,
        residual: report.residual,
    };
    Ok((data, params))
}

const ORDER: usize = 32;

#[derive(Debug, Clone)]
struct Anchor {
    inverted: bool,
    c: Vec<C64>,
}

/// Gauss map of M_λ in the chart where dh = dζ, periods i and ω.
///
/// g solves g″ = P′(g)/(2A²), P(g) = λg³ + (1−λ²)g² − λg, with a double zero at ζ = 0.
/// Zeros sit at mω + ni, poles at (m+½)ω + (n+½)i; −1/g satisfies the same equation.
#[derive(Debug, Clone)]
pub struct RiemannGauss {
    pub lambda: f64,
    pub a2: C64,
    pub omega: f64,
    nx: usize,
    ny: usize,
    anchors: Vec<Anchor>,
}

impl RiemannGauss {
    pub fn new(lambda: f64, a: C64, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(WlabError::Precondition("ω must be positive".into()));
        }
        let mut per_unit = 16usize;
        loop {
            let nx = ((omega * per_unit as f64).ceil() as usize).max(2) + 1;
            let ny = per_unit + 1;
            let mut s = Self { lambda, a2: a * a, omega, nx, ny, anchors: Vec::new() };
            let (hx, hy) = s.spacing();
            let min_r = (0..ny)
                .flat_map(|j| (0..nx).map(move |i| (i, j)))
                .map(|(i, j)| s.radius(c(i as f64 * hx, j as f64 * hy)))
                .fold(f64::INFINITY, f64::min);
            if hx.max(hy) <= 0.3 * min_r && 0.5 * hx.hypot(hy) <= 0.3 * min_r {
                s.build();
                return Ok(s);
            }
            per_unit *= 2;
            if per_unit > 4096 {
                return Err(WlabError::NoConvergence("anchor grid refinement".into()));
            }
        }
    }

    fn spacing(&self) -> (f64, f64) {
        (self.omega / (self.nx - 1) as f64, 1.0 / (self.ny - 1) as f64)
    }

    fn lattice_dist(&self, z: C64, shift: C64) -> f64 {
        let w = z - shift;
        let m0 = (w.re / self.omega).round();
        let n0 = w.im.round();
        let mut best = f64::INFINITY;
        for dm in -1..=1 {
            for dn in -1..=1 {
                let p = c((m0 + dm as f64) * self.omega, n0 + dn as f64);
                best = best.min((w - p).norm());
            }
        }
        best
    }

    pub fn distance_to_zero(&self, z: C64) -> f64 {
        self.lattice_dist(z, c(0.0, 0.0))
    }

    pub fn distance_to_pole(&self, z: C64) -> f64 {
        self.lattice_dist(z, c(0.5 * self.omega, 0.5))
    }

    fn inverted_at(&self, z: C64) -> bool {
        self.distance_to_pole(z) < self.distance_to_zero(z)
    }

    fn radius(&self, z: C64) -> f64 {
        if self.inverted_at(z) {
            self.distance_to_zero(z)
        } else {
            self.distance_to_pole(z)
        }
    }

    /// Taylor coefficients of the ODE solution with value `v` and derivative `d`.
    pub fn series(&self, v: C64, d: C64, order: usize) -> Vec<C64> {
        let n = order.max(1) + 1;
        let lam = self.lambda;
        let mut a = vec![c(0.0, 0.0); n];
        a[0] = v;
        a[1] = d;
        for k in 0..n - 2 {
            let conv: C64 = (0..=k).map(|j| a[j] * a[k - j]).sum();
            let mut num = 3.0 * lam * conv + 2.0 * (1.0 - lam * lam) * a[k];
            if k == 0 {
                num -= lam;
            }
            a[k + 2] = num / (2.0 * self.a2 * ((k + 1) * (k + 2)) as f64);
        }
        a.truncate(order + 1);
        a
    }

    fn value_and_slope(coeffs: &[C64], dz: C64) -> (C64, C64) {
        let v = coeffs.iter().rev().fold(c(0.0, 0.0), |acc, x| acc * dz + x);
        let d = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(c(0.0, 0.0), |acc, (k, x)| acc * dz + x * k as f64);
        (v, d)
    }

    fn build(&mut self) {
        let (hx, hy) = self.spacing();
        let mut anchors: Vec<Anchor> = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = c(i as f64 * hx, j as f64 * hy);
                let inverted = self.inverted_at(p);
                let (v, d, from_inv) = if i == 0 && j == 0 {
                    (c(0.0, 0.0), c(0.0, 0.0), false)
                } else {
                    let (src, step) = if j == 0 {
                        (&anchors[i - 1], c(hx, 0.0))
                    } else {
                        (&anchors[(j - 1) * self.nx + i], c(0.0, hy))
                    };
                    let (v, d) = Self::value_and_slope(&src.c, step);
                    (v, d, src.inverted)
                };
                let (v, d) = if from_inv != inverted { (-1.0 / v, d / (v * v)) } else { (v, d) };
                anchors.push(Anchor { inverted, c: self.series(v, d, ORDER) });
            }
        }
        self.anchors = anchors;
    }

    fn locate(&self, z: C64) -> (&Anchor, C64) {
        let (hx, hy) = self.spacing();
        let x = z.re.rem_euclid(self.omega);
        let y = z.im.rem_euclid(1.0);
        let i = ((x / hx).round() as usize).min(self.nx - 1);
        let j = ((y / hy).round() as usize).min(self.ny - 1);
        (&self.anchors[j * self.nx + i], c(x - i as f64 * hx, y - j as f64 * hy))
    }

    pub fn eval(&self, z: C64) -> C64 {
        let (a, dz) = self.locate(z);
        let v = a.c.iter().rev().fold(c(0.0, 0.0), |acc, x| acc * dz + x);
        if a.inverted {
            -1.0 / v
        } else {
            v
        }
    }

    /// Taylor coefficients [g, g′, g″/2, …] of order `n` at `z`.
    pub fn jet(&self, z: C64, n: usize) -> Vec<C64> {
        let (a, dz) = self.locate(z);
        let (v, d) = Self::value_and_slope(&a.c, dz);
        let s = self.series(v, d, n);
        if a.inverted {
            let r = crate::complexkit::Jet::new(s).recip();
            r.c.into_iter().map(|x| -x).collect()
        } else {
            s
        }
    }

    /// Zeros (double, planar ends) in the window [x0, x1] × [y0, y1].
    pub fn zeros_in(&self, x: (f64, f64), y: (f64, f64)) -> Vec<C64> {
        self.lattice_in(c(0.0, 0.0), x, y)
    }

    /// Poles (double, planar ends) in the window.
    pub fn poles_in(&self, x: (f64, f64), y: (f64, f64)) -> Vec<C64> {
        self.lattice_in(c(0.5 * self.omega, 0.5), x, y)
    }

    fn lattice_in(&self, shift: C64, x: (f64, f64), y: (f64, f64)) -> Vec<C64> {
        let mut out = Vec::new();
        let m0 = ((x.0 - shift.re) / self.omega).ceil() as i64;
        let m1 = ((x.1 - shift.re) / self.omega).floor() as i64;
        let n0 = (y.0 - shift.im).ceil() as i64;
        let n1 = (y.1 - shift.im).floor() as i64;
        for m in m0..=m1 {
            for n in n0..=n1 {
                out.push(shift + c(m as f64 * self.omega, n as f64));
            }
        }
        out
    }
}

/// M_λ in the chart dh = dζ on the cylinder ℂ/⟨i⟩, base point ω/4.
pub fn riemann_cylinder(params: &RiemannExampleParams) -> Result<(WeierstrassData, RiemannGauss)> {
    let rg = RiemannGauss::new(params.lambda, params.a, params.omega)?;
    let win = ((-2.0 * rg.omega, 3.0 * rg.omega), (-2.0, 3.0));
    let poles = rg.poles_in(win.0, win.1);
    let zeros = rg.zeros_in(win.0, win.1);
    let mut ends: Vec<DeclaredEnd> = zeros
        .iter()
        .map(|&p| DeclaredEnd { location: Some(p), kind: EndKind::Planar, g_order: 2 })
        .collect();
    ends.extend(poles.iter().map(|&q| DeclaredEnd { location: Some(q), kind: EndKind::Planar, g_order: -2 }));
    let (e1, e2) = (rg.clone(), rg.clone());
    let g = AnalyticFn::new(move |z| e1.eval(z))
        .with_taylor(move |z, n| e2.jet(z, n))
        .with_singularities(poles.iter().map(|&q| Singularity { location: q, order: 2 }).collect());
    let data = WeierstrassData {
        name: format!("riemann-cylinder:λ={}", params.lambda),
        g,
        phi: AnalyticFn::constant(c(1.0, 0.0)),
        chart: Chart::Cylinder { period: 1.0 },
        base_point: ChartPoint::new(c(0.25 * rg.omega, 0.0)),
        base_position: [0.0; 3],
        ends,
    };
    Ok((data, rg))
}
