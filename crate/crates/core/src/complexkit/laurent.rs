use super::analytic::AnalyticFn;
use super::C64;
use crate::error::{Result, WlabError};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

const MAX_SAMPLES: usize = 8192;

/// Laurent coefficients c_{-m}..c_{+m} around `center`, measured on a circle of `radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentJet {
    pub center: C64,
    pub radius: f64,
    pub m: usize,
    pub coefficients: Vec<C64>,
}

impl LaurentJet {
    pub fn coeff(&self, k: i32) -> C64 {
        let idx = k + self.m as i32;
        if idx < 0 || idx as usize >= self.coefficients.len() {
            return C64::new(0.0, 0.0);
        }
        self.coefficients[idx as usize]
    }
}

fn trapezoid(f: &dyn Fn(C64) -> C64, z0: C64, r: f64, n: usize) -> Vec<C64> {
    let mut buf: Vec<C64> = (0..n)
        .map(|j| f(z0 + C64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / n as f64)))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter_mut().for_each(|v| *v /= n as f64);
    buf
}

fn extract(spec: &[C64], r: f64, lo: i32, hi: i32) -> Vec<C64> {
    let n = spec.len() as i32;
    (lo..=hi).map(|k| spec[k.rem_euclid(n) as usize] * r.powi(-k)).collect()
}

/// Coefficients c_lo..c_hi by the FFT trapezoid rule, doubling the sample count until stable.
pub(crate) fn laurent_coefficients(
    f: &dyn Fn(C64) -> C64,
    z0: C64,
    r: f64,
    lo_neg: usize,
    hi: usize,
) -> Result<Vec<C64>> {
    let (lo, hi) = (-(lo_neg as i32), hi as i32);
    let mut n = (4 * (lo_neg + hi as usize + 1)).next_power_of_two().max(64);
    let mut prev = extract(&trapezoid(f, z0, r, n), r, lo, hi);
    while n < MAX_SAMPLES {
        n *= 2;
        let spec = trapezoid(f, z0, r, n);
        if spec.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(WlabError::NoConvergence("non-finite samples on the Laurent circle".into()));
        }
        let cur = extract(&spec, r, lo, hi);
        let scale = cur
            .iter()
            .zip(lo..=hi)
            .map(|(c, k)| c.norm() * r.powi(k))
            .fold(1e-300, f64::max);
        let diff = cur
            .iter()
            .zip(&prev)
            .zip(lo..=hi)
            .map(|((a, b), k)| (a - b).norm() * r.powi(k))
            .fold(0.0, f64::max);
        if diff <= 1e-12 * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(WlabError::NoConvergence("Laurent coefficients did not stabilise".into()))
}

/// Laurent jet with the default radius when `r` is `None`: half the distance to the nearest other singularity.
pub fn laurent_jet(f: &AnalyticFn, z0: C64, m: usize, r: Option<f64>) -> Result<LaurentJet> {
    let radius = match r {
        Some(r) => r,
        None => {
            let d = f
                .singularities()
                .iter()
                .map(|s| (s.location - z0).norm())
                .filter(|&d| d > 1e-9)
                .fold(f64::INFINITY, f64::min);
            if d.is_finite() {
                0.5 * d
            } else {
                0.5
            }
        }
    };
    if radius <= 0.0 || !radius.is_finite() {
        return Err(WlabError::Precondition("Laurent radius must be positive".into()));
    }
    let coefficients = laurent_coefficients(&|z| f.eval(z), z0, radius, m, m)?;
    Ok(LaurentJet { center: z0, radius, m, coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexkit::analytic::Singularity;
    use crate::complexkit::quad::residue_at;

    #[test]
    fn inverse_square() {
        let f = AnalyticFn::new(|z| 1.0 / (z * z))
            .with_singularities(vec![Singularity { location: C64::new(0.0, 0.0), order: 2 }]);
        let j = laurent_jet(&f, C64::new(0.0, 0.0), 4, Some(0.5)).unwrap();
        assert!((j.coeff(-2) - 1.0).norm() < 1e-12);
        for k in [-4, -3, -1, 0, 1, 2, 3, 4] {
            assert!(j.coeff(k).norm() < 1e-12, "c_{k} = {}", j.coeff(k));
        }
    }

    #[test]
    fn exponential_taylor() {
        let f = AnalyticFn::new(|z| z.exp());
        let j = laurent_jet(&f, C64::new(0.0, 0.0), 6, Some(1.0)).unwrap();
        let mut fact = 1.0;
        for k in 0..=6 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((j.coeff(k) - 1.0 / fact).norm() < 1e-8 / fact);
        }
    }

    #[test]
    fn residue_matches_c_minus_one() {
        let z1 = C64::new(0.2, -0.1);
        let f = AnalyticFn::new(move |z| z.exp() / (z - z1) + 1.0 / ((z - z1) * (z - z1)))
            .with_singularities(vec![Singularity { location: z1, order: 2 }]);
        let j = laurent_jet(&f, z1, 3, Some(0.3)).unwrap();
        let r = residue_at(&f, z1, 0.3).unwrap();
        assert!((j.coeff(-1) - r).norm() < 1e-8);
        assert!((j.coeff(-1) - z1.exp()).norm() < 1e-10);
    }
}
