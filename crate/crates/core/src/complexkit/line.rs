//! Periodic (or twisted-periodic) samples along a straight line in the chart.

use super::C64;
use crate::error::{Result, WlabError};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Direction of the sampled line. On a vertical line `z = offset + i s`; on a horizontal one `z = s + i offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineAxis {
    Vertical,
    Horizontal,
}

/// Samples `f(s_j)`, `s_j = start + j·period/N`, with `f(s + period) = e^twist · f(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledLine {
    pub axis: LineAxis,
    pub offset: f64,
    pub start: f64,
    pub period: f64,
    pub twist: C64,
    pub values: Vec<C64>,
}

/// Relative spectral energy above which a line counts as under-resolved.
pub const ALIAS_THRESHOLD: f64 = 1e-10;

impl SampledLine {
    /// Sample `f` on the vertical line `Re z = x0` over one period starting at `Im z = 0`.
    pub fn vertical(x0: f64, n: usize, period: f64, f: impl Fn(C64) -> C64) -> Self {
        let mut line = Self {
            axis: LineAxis::Vertical,
            offset: x0,
            start: 0.0,
            period,
            twist: C64::new(0.0, 0.0),
            values: Vec::new(),
        };
        line.values = vec![C64::new(0.0, 0.0); n];
        line.values = (0..n).map(|j| f(line.point(j))).collect();
        line
    }

    /// Sample `f` on the horizontal line `Im z = y0` over `[x_start, x_start + period)`.
    pub fn horizontal(y0: f64, x_start: f64, n: usize, period: f64, f: impl Fn(C64) -> C64) -> Self {
        let mut line = Self {
            axis: LineAxis::Horizontal,
            offset: y0,
            start: x_start,
            period,
            twist: C64::new(0.0, 0.0),
            values: Vec::new(),
        };
        line.values = vec![C64::new(0.0, 0.0); n];
        line.values = (0..n).map(|j| f(line.point(j))).collect();
        line
    }

    pub fn with_twist(mut self, twist: C64) -> Self {
        self.twist = twist;
        self
    }

    /// Same geometry, new values.
    pub fn with_values(&self, values: Vec<C64>) -> Self {
        Self { values, ..self.clone() }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n() as f64
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        self.start + self.spacing() * j as f64
    }

    /// Chart point of sample `j`.
    pub fn point(&self, j: usize) -> C64 {
        self.point_at(C64::new(self.coordinate(j), 0.0))
    }

    /// Chart point at (possibly complex) line coordinate `s`.
    pub fn point_at(&self, s: C64) -> C64 {
        match self.axis {
            LineAxis::Vertical => C64::new(self.offset, 0.0) + C64::new(0.0, 1.0) * s,
            LineAxis::Horizontal => s + C64::new(0.0, self.offset),
        }
    }

    /// Line coordinate of chart point `z`.
    pub fn coordinate_of(&self, z: C64) -> C64 {
        match self.axis {
            LineAxis::Vertical => (z - self.offset) * C64::new(0.0, -1.0),
            LineAxis::Horizontal => z - C64::new(0.0, self.offset),
        }
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.n()).map(|j| self.point(j)).collect()
    }

    /// Signed mode index for FFT bin `j`.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n() as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Frequency in the line coordinate: ∂_s acts on bin `j` as multiplication by this value.
    pub fn ds_symbol(&self, j: usize) -> C64 {
        (self.twist + C64::new(0.0, 2.0 * PI * self.mode(j) as f64)) / self.period
    }

    /// Symbol of ∂_z on bin `j`.
    pub fn dz_symbol(&self, j: usize) -> C64 {
        match self.axis {
            LineAxis::Vertical => self.ds_symbol(j) * C64::new(0.0, -1.0),
            LineAxis::Horizontal => self.ds_symbol(j),
        }
    }

    fn untwist_factor(&self, j: usize) -> C64 {
        (-self.twist * (j as f64 / self.n() as f64)).exp()
    }

    /// Fourier coefficients of the untwisted periodic part, FFT ordering, normalised by N.
    pub fn spectrum(&self) -> Vec<C64> {
        let n = self.n();
        let mut buf: Vec<C64> = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v * self.untwist_factor(j))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        buf.iter_mut().for_each(|v| *v /= n as f64);
        buf
    }

    /// Inverse of [`spectrum`](Self::spectrum).
    pub fn from_spectrum(&self, spec: &[C64]) -> Self {
        let n = self.n();
        let mut buf = spec.to_vec();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let values = buf
            .iter()
            .enumerate()
            .map(|(j, v)| v / self.untwist_factor(j))
            .collect();
        self.with_values(values)
    }

    /// Fraction of spectral energy in modes beyond N/3.
    pub fn top_third_energy(&self) -> f64 {
        let spec = self.spectrum();
        let n = self.n() as f64;
        let shift = self.twist.im / (2.0 * PI);
        let (mut top, mut total) = (0.0, 0.0);
        for (j, c) in spec.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if (self.mode(j) as f64 + shift).abs() > n / 3.0 {
                top += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            top / total
        }
    }

    fn nyquist_ambiguous(&self) -> bool {
        let b = self.twist.im.rem_euclid(2.0 * PI);
        b.min(2.0 * PI - b) < 1e-12
    }

    /// ∂_z^order without the aliasing gate (any order).
    pub fn dz(&self, order: usize) -> Self {
        if order == 0 {
            return self.clone();
        }
        let n = self.n();
        let mut spec = self.spectrum();
        for (j, c) in spec.iter_mut().enumerate() {
            *c *= self.dz_symbol(j).powu(order as u32);
        }
        if n.is_multiple_of(2) && order % 2 == 1 && self.nyquist_ambiguous() {
            spec[n / 2] = C64::new(0.0, 0.0);
        }
        self.from_spectrum(&spec)
    }

    /// Jet columns `[f, f′, …, f^(k)]` on the line.
    pub fn dz_jets(&self, k: usize) -> Vec<Vec<C64>> {
        let spec = self.spectrum();
        let n = self.n();
        (0..=k)
            .map(|order| {
                let mut s = spec.clone();
                for (j, c) in s.iter_mut().enumerate() {
                    *c *= self.dz_symbol(j).powu(order as u32);
                }
                if n.is_multiple_of(2) && order % 2 == 1 && self.nyquist_ambiguous() {
                    s[n / 2] = C64::new(0.0, 0.0);
                }
                self.from_spectrum(&s).values
            })
            .collect()
    }

    /// Analytic continuation of the Fourier interpolant to chart point `z`, skipping modes below `floor`.
    pub fn continue_at(&self, z: C64, floor: f64) -> C64 {
        let spec = self.spectrum();
        self.continue_spectrum(&spec, z, floor)
    }

    pub(crate) fn continue_spectrum(&self, spec: &[C64], z: C64, floor: f64) -> C64 {
        let s = self.coordinate_of(z) - self.start;
        let cut = floor * spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut acc = C64::new(0.0, 0.0);
        for (j, c) in spec.iter().enumerate() {
            if c.norm() <= cut {
                continue;
            }
            acc += c * (self.ds_symbol(j) * s).exp();
        }
        acc
    }

    /// Mean over one period times the period: ∫ f ds.
    pub fn integral_ds(&self) -> C64 {
        self.values.iter().sum::<C64>() * self.spacing()
    }

    /// ∫ f dz along one period of the line (untwisted lines only).
    pub fn integral_dz(&self) -> C64 {
        match self.axis {
            LineAxis::Vertical => self.integral_ds() * C64::new(0.0, 1.0),
            LineAxis::Horizontal => self.integral_ds(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SampledLine) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Sample dump: `N` as u64 then (re, im) float32 pairs, little-endian.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.n());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&(v.re as f32).to_le_bytes());
            out.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
        out
    }
}

/// ∂_z^order of a line by spectral differentiation, guarded against under-resolution.
pub fn spectral_derivative(line: &SampledLine, order: usize) -> Result<SampledLine> {
    if !(1..=4).contains(&order) {
        return Err(WlabError::Precondition(format!("derivative order {order} outside 1..4")));
    }
    if !line.n().is_power_of_two() {
        return Err(WlabError::Precondition("sample count must be a power of two".into()));
    }
    let e = line.top_third_energy();
    if e > ALIAS_THRESHOLD {
        return Err(WlabError::AliasingDetected(e));
    }
    Ok(line.dz(order))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_on_horizontal_line() {
        let f = |z: C64| (C64::new(0.0, 2.0 * PI) * z).exp();
        let line = SampledLine::horizontal(0.1, 0.0, 64, 1.0, f);
        let d = spectral_derivative(&line, 1).unwrap();
        for (j, v) in d.values.iter().enumerate() {
            let want = C64::new(0.0, 2.0 * PI) * f(line.point(j));
            assert!((v - want).norm() < 1e-10);
        }
    }

    #[test]
    fn third_derivative_of_second_harmonic() {
        let c = C64::new(0.0, 4.0 * PI);
        let line = SampledLine::horizontal(0.0, 0.0, 64, 1.0, |z| (c * z).exp());
        let d = spectral_derivative(&line, 3).unwrap();
        let k3 = c * c * c;
        assert!(d.values.iter().zip(&line.values).all(|(a, b)| (a - k3 * b).norm() < 1e-8));
    }

    #[test]
    fn vertical_line_exponential() {
        // e^{2πz} is i-periodic
        let c = C64::new(2.0 * PI, 0.0);
        let line = SampledLine::vertical(0.2, 32, 1.0, |z| (c * z).exp());
        let d = spectral_derivative(&line, 2).unwrap();
        assert!(d.values.iter().zip(&line.values).all(|(a, b)| (a - c * c * b).norm() < 1e-9 * b.norm()));
    }

    #[test]
    fn constant_has_zero_derivative() {
        let line = SampledLine::vertical(0.0, 16, 1.0, |_| C64::new(3.0, -1.0));
        assert!(spectral_derivative(&line, 1).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn twisted_line_derivative() {
        // e^{z/2} on a vertical line of period 2π picks up the factor e^{iπ} = −1
        let line = SampledLine::vertical(0.3, 32, 2.0 * PI, |z| (z * 0.5).exp()).with_twist(C64::new(0.0, PI));
        let d = spectral_derivative(&line, 1).unwrap();
        assert!(d.values.iter().zip(&line.values).all(|(a, b)| (a - 0.5 * b).norm() < 1e-12));
    }

    #[test]
    fn aliasing_detected_for_rough_data() {
        let line = SampledLine::vertical(0.0, 16, 1.0, |z| 1.0 / (z - C64::new(0.01, 0.5)));
        assert!(matches!(spectral_derivative(&line, 1), Err(WlabError::AliasingDetected(_))));
    }

    #[test]
    fn second_order_equals_two_first_orders() {
        let line = SampledLine::vertical(0.0, 64, 1.0, |z| (C64::new(2.0 * PI, 0.0) * z).exp().sin());
        let a = spectral_derivative(&line, 2).unwrap();
        let b = spectral_derivative(&spectral_derivative(&line, 1).unwrap(), 1).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9 * a.max_abs());
    }

    #[test]
    fn continuation_off_line() {
        let f = |z: C64| (C64::new(2.0 * PI, 0.0) * z).exp() * 0.5 + 1.0;
        let line = SampledLine::vertical(0.0, 32, 1.0, f);
        let z = C64::new(0.1, 0.37);
        assert!((line.continue_at(z, 0.0) - f(z)).norm() < 1e-12);
    }
}
