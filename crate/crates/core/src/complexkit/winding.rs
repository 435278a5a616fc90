use super::analytic::AnalyticFn;
use super::contour::Contour;
use super::C64;
use crate::error::{Result, WlabError};
use std::f64::consts::PI;

const MAX_STEP_ANGLE: f64 = PI / 6.0;
const MAX_DEPTH: u32 = 40;

fn arg_increment(f: &dyn Fn(C64) -> C64, a: C64, fa: C64, b: C64, fb: C64, depth: u32) -> Result<f64> {
    if fb.norm() == 0.0 || !fb.re.is_finite() || !fb.im.is_finite() {
        return Err(WlabError::ZeroOnPath(format!("{b}")));
    }
    let d = (fb / fa).arg();
    if d.abs() <= MAX_STEP_ANGLE {
        return Ok(d);
    }
    if depth >= MAX_DEPTH {
        return Err(WlabError::ZeroOnPath(format!("{}", (a + b) * 0.5)));
    }
    let m = (a + b) * 0.5;
    let fm = f(m);
    if fm.norm() == 0.0 || !fm.re.is_finite() || !fm.im.is_finite() {
        return Err(WlabError::ZeroOnPath(format!("{m}")));
    }
    Ok(arg_increment(f, a, fa, m, fm, depth + 1)? + arg_increment(f, m, fm, b, fb, depth + 1)?)
}

/// Raw winding number (total argument change / 2π) of `f` along the point sequence.
pub fn winding_raw(f: &dyn Fn(C64) -> C64, points: &[C64]) -> Result<f64> {
    let mut total = 0.0;
    let mut fa = f(points[0]);
    if fa.norm() == 0.0 || !fa.re.is_finite() || !fa.im.is_finite() {
        return Err(WlabError::ZeroOnPath(format!("{}", points[0])));
    }
    for w in points.windows(2) {
        // sub-sample each edge so that short arg steps are seen even on coarse polygons
        let sub = 8;
        for j in 0..sub {
            let a = w[0] + (w[1] - w[0]) * (j as f64 / sub as f64);
            let b = w[0] + (w[1] - w[0]) * ((j + 1) as f64 / sub as f64);
            let fb = f(b);
            total += arg_increment(f, a, fa, b, fb, 0)?;
            fa = fb;
        }
    }
    Ok(total / (2.0 * PI))
}

/// Round a winding estimate, failing loudly when it is not near an integer.
pub fn round_winding(raw: f64) -> Result<i64> {
    let r = raw.round();
    if (raw - r).abs() < 0.1 {
        Ok(r as i64)
    } else {
        Err(WlabError::WindingNotInteger(raw))
    }
}

/// #zeros − #poles of `f` inside the closed contour `c`.
pub fn count_zeros_poles(f: &AnalyticFn, c: &Contour) -> Result<i64> {
    if !c.is_closed() {
        return Err(WlabError::Precondition("argument principle needs a closed contour".into()));
    }
    round_winding(winding_raw(&|z| f.eval(z), &c.points())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_functions() {
        let circ = Contour::circle(C64::new(0.0, 0.0), 0.1, 16);
        assert_eq!(count_zeros_poles(&AnalyticFn::new(|z| z * z), &circ).unwrap(), 2);
        assert_eq!(count_zeros_poles(&AnalyticFn::new(|z| 1.0 / (z * z * z)), &circ).unwrap(), -3);
        assert_eq!(count_zeros_poles(&AnalyticFn::new(|z| z.exp()), &circ).unwrap(), 0);
    }

    #[test]
    fn zero_on_path_detected() {
        let circ = Contour::circle(C64::new(0.0, 0.0), 1.0, 16);
        let r = count_zeros_poles(&AnalyticFn::new(|z| z - 1.0), &circ);
        assert!(matches!(r, Err(WlabError::ZeroOnPath(_))));
    }

    #[test]
    fn non_integer_rejected() {
        assert!(round_winding(0.5).is_err());
        assert_eq!(round_winding(1.95).unwrap(), 2);
    }
}
