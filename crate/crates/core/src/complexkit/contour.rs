use super::C64;
use crate::error::{Result, WlabError};
use std::f64::consts::PI;

const MIN_SAMPLES: usize = 8;

/// Oriented polyline in the complex plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    samples: Vec<C64>,
    closed: bool,
    orientation: i8,
}

impl Contour {
    pub fn new(samples: Vec<C64>, closed: bool) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(WlabError::Precondition(format!(
                "contour needs at least {MIN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if samples.windows(2).any(|w| w[0] == w[1]) {
            return Err(WlabError::Precondition("repeated consecutive contour samples".into()));
        }
        if closed {
            let (a, b) = (samples[0], samples[samples.len() - 1]);
            let scale = samples.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if (a - b).norm() > 1e-12 * scale {
                return Err(WlabError::Precondition("closed contour does not return to its start".into()));
            }
        }
        Ok(Self { samples, closed, orientation: 1 })
    }

    /// Counterclockwise circle as a closed polygon with `n` edges.
    pub fn circle(center: C64, radius: f64, n: usize) -> Self {
        let n = n.max(MIN_SAMPLES);
        let mut samples: Vec<C64> = (0..n)
            .map(|j| center + C64::from_polar(radius, 2.0 * PI * j as f64 / n as f64))
            .collect();
        samples.push(samples[0]);
        Self { samples, closed: true, orientation: 1 }
    }

    /// Arc of a circle from angle `t0` to `t1` (open).
    pub fn arc(center: C64, radius: f64, t0: f64, t1: f64, n: usize) -> Self {
        let n = n.max(MIN_SAMPLES - 1);
        let samples = (0..=n)
            .map(|j| center + C64::from_polar(radius, t0 + (t1 - t0) * j as f64 / n as f64))
            .collect();
        Self { samples, closed: false, orientation: 1 }
    }

    /// Straight segment resampled to the minimum sample count.
    pub fn segment(a: C64, b: C64) -> Self {
        Self::through(&[a, b])
    }

    /// Open polyline through the given waypoints.
    pub fn through(points: &[C64]) -> Self {
        let per = MIN_SAMPLES - 1;
        let mut samples = vec![points[0]];
        for w in points.windows(2) {
            for j in 1..=per {
                samples.push(w[0] + (w[1] - w[0]) * (j as f64 / per as f64));
            }
        }
        samples.dedup();
        Self { samples, closed: false, orientation: 1 }
    }

    /// Axis-aligned vertical segment `x0 + i[y0, y1]`, closed on the cylinder of period `y1 - y0`.
    pub fn vertical_period(x0: f64, y0: f64, y1: f64, n: usize) -> Self {
        let n = n.max(MIN_SAMPLES);
        let samples = (0..=n)
            .map(|j| C64::new(x0, y0 + (y1 - y0) * j as f64 / n as f64))
            .collect();
        Self { samples, closed: false, orientation: 1 }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn reversed(&self) -> Self {
        Self { samples: self.samples.clone(), closed: self.closed, orientation: -self.orientation }
    }

    /// Point sequence in traversal order.
    pub fn points(&self) -> Vec<C64> {
        let mut p = self.samples.clone();
        if self.orientation < 0 {
            p.reverse();
        }
        p
    }

    /// Directed edges in traversal order.
    pub fn segments(&self) -> Vec<(C64, C64)> {
        let p = self.points();
        p.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn start(&self) -> C64 {
        self.points()[0]
    }

    pub fn end(&self) -> C64 {
        *self.points().last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Euclidean distance from `p` to the polyline.
    pub fn distance_to(&self, p: C64) -> f64 {
        self.samples
            .windows(2)
            .map(|w| segment_distance(w[0], w[1], p))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn segment_distance(a: C64, b: C64, p: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * d.conj()).re / len2;
    (p - (a + d * t.clamp(0.0, 1.0))).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_closed_and_long_enough() {
        let c = Contour::circle(C64::new(0.0, 0.0), 1.0, 16);
        assert!(c.is_closed());
        assert_eq!(c.segments().len(), 16);
        assert!((c.length() - 2.0 * PI).abs() < 0.1);
    }

    #[test]
    fn too_few_samples_rejected() {
        let pts = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!(Contour::new(pts, false).is_err());
    }

    #[test]
    fn reversal_flips_traversal() {
        let c = Contour::segment(C64::new(0.0, 0.0), C64::new(1.0, 1.0));
        let r = c.reversed();
        assert_eq!(r.start(), c.end());
        assert_eq!(r.end(), c.start());
    }

    #[test]
    fn distance_to_segment() {
        let c = Contour::segment(C64::new(-1.0, 0.0), C64::new(1.0, 0.0));
        assert!((c.distance_to(C64::new(0.0, 0.5)) - 0.5).abs() < 1e-15);
        assert!((c.distance_to(C64::new(2.0, 0.0)) - 1.0).abs() < 1e-15);
    }
}
