use super::jet::Jet;
use super::laurent::laurent_coefficients;
use super::C64;
use crate::error::Result;
use std::fmt;
use std::sync::Arc;

type EvalFn = dyn Fn(C64) -> C64 + Send + Sync;
type TaylorFn = dyn Fn(C64, usize) -> Vec<C64> + Send + Sync;

/// Declared singularity: location and pole order (0 when the order is not known).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub location: C64,
    pub order: u32,
}

/// Pure complex function with declared singularities and an optional exact Taylor jet.
#[derive(Clone)]
pub struct AnalyticFn {
    eval: Arc<EvalFn>,
    taylor: Option<Arc<TaylorFn>>,
    singularities: Vec<Singularity>,
}

impl fmt::Debug for AnalyticFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFn")
            .field("singularities", &self.singularities)
            .field("exact_jet", &self.taylor.is_some())
            .finish()
    }
}

impl AnalyticFn {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(C64) -> C64 + Send + Sync + 'static,
    {
        Self { eval: Arc::new(f), taylor: None, singularities: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(move |_| c).with_taylor(move |_, n| {
            let mut v = vec![C64::new(0.0, 0.0); n + 1];
            v[0] = c;
            v
        })
    }

    pub fn zero() -> Self {
        Self::constant(C64::new(0.0, 0.0))
    }

    /// Attach an exact Taylor-coefficient generator: `t(z, n)` returns `[f, f', f''/2!, ..., f^(n)/n!]`.
    pub fn with_taylor<T>(mut self, t: T) -> Self
    where
        T: Fn(C64, usize) -> Vec<C64> + Send + Sync + 'static,
    {
        self.taylor = Some(Arc::new(t));
        self
    }

    pub fn with_singularities(mut self, s: Vec<Singularity>) -> Self {
        self.singularities = s;
        self
    }

    pub fn eval(&self, z: C64) -> C64 {
        (self.eval)(z)
    }

    pub fn singularities(&self) -> &[Singularity] {
        &self.singularities
    }

    pub fn has_exact_jet(&self) -> bool {
        self.taylor.is_some()
    }

    /// Distance from `z` to the nearest declared singularity.
    pub fn singular_distance(&self, z: C64) -> f64 {
        self.singularities
            .iter()
            .map(|s| (s.location - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Taylor jet of order `n` at `z`. Falls back to Cauchy integrals on a circle when no exact jet exists.
    pub fn jet(&self, z: C64, n: usize) -> Result<Jet> {
        if let Some(t) = &self.taylor {
            return Ok(Jet::new(t(z, n)));
        }
        let r = (0.5 * self.singular_distance(z)).min(0.05);
        let c = laurent_coefficients(&|w| self.eval(w), z, r, 0, n)?;
        Ok(Jet::new(c))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &AnalyticFn) -> AnalyticFn {
        let (a, b) = (self.clone(), other.clone());
        let mut s = self.singularities.clone();
        s.extend_from_slice(&other.singularities);
        let mut out = AnalyticFn::new(move |z| a.eval(z) * b.eval(z)).with_singularities(s);
        if let (Some(ta), Some(tb)) = (self.taylor.clone(), other.taylor.clone()) {
            out = out.with_taylor(move |z, n| {
                let p = &Jet::new(ta(z, n)) * &Jet::new(tb(z, n));
                p.c
            });
        }
        out
    }

    pub fn scale(&self, c: C64) -> AnalyticFn {
        let a = self.clone();
        let mut out = AnalyticFn::new(move |z| c * a.eval(z)).with_singularities(self.singularities.clone());
        if let Some(t) = self.taylor.clone() {
            out = out.with_taylor(move |z, n| t(z, n).into_iter().map(|v| v * c).collect());
        }
        out
    }

    /// Pointwise reciprocal; zeros of `self` must be declared by the caller if needed.
    pub fn recip(&self) -> AnalyticFn {
        let a = self.clone();
        let mut out = AnalyticFn::new(move |z| 1.0 / a.eval(z)).with_singularities(self.singularities.clone());
        if let Some(t) = self.taylor.clone() {
            out = out.with_taylor(move |z, n| Jet::new(t(z, n)).recip().c);
        }
        out
    }

    /// Pre-composition with a translation, `z ↦ f(z + shift)`.
    pub fn shifted(&self, shift: C64) -> AnalyticFn {
        let a = self.clone();
        let s = self
            .singularities
            .iter()
            .map(|s| Singularity { location: s.location - shift, order: s.order })
            .collect();
        let mut out = AnalyticFn::new(move |z| a.eval(z + shift)).with_singularities(s);
        if let Some(t) = self.taylor.clone() {
            out = out.with_taylor(move |z, n| t(z + shift, n));
        }
        out
    }
}

/// `exp(c z)` with exact jets.
pub fn exp_linear(c: C64) -> AnalyticFn {
    AnalyticFn::new(move |z| (c * z).exp()).with_taylor(move |z, n| {
        let mut v = Vec::with_capacity(n + 1);
        let mut term = (c * z).exp();
        for k in 0..=n {
            v.push(term);
            term = term * c / (k as f64 + 1.0);
        }
        v
    })
}

/// Polynomial with the given coefficients (lowest degree first), exact jets.
pub fn polynomial(coeffs: Vec<C64>) -> AnalyticFn {
    let cf = coeffs.clone();
    AnalyticFn::new(move |z| cf.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)).with_taylor(
        move |z, n| {
            let mut work = coeffs.clone();
            let mut out = Vec::with_capacity(n + 1);
            for _ in 0..=n {
                if work.is_empty() {
                    out.push(C64::new(0.0, 0.0));
                    continue;
                }
                // synthetic division by (w - z): remainder is the next Taylor coefficient
                let deg = work.len() - 1;
                let mut q = vec![C64::new(0.0, 0.0); deg];
                let mut acc = C64::new(0.0, 0.0);
                for k in (0..=deg).rev() {
                    acc = acc * z + work[k];
                    if k > 0 {
                        q[k - 1] = acc;
                    }
                }
                out.push(acc);
                work = q;
            }
            out
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_jet_matches_derivatives() {
        // p(z) = 1 + 2z + 3z^2 at z = 2: p = 17, p' = 14, p''/2 = 3
        let p = polynomial(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)]);
        let j = p.jet(C64::new(2.0, 0.0), 4).unwrap();
        assert!((j.c[0] - 17.0).norm() < 1e-13);
        assert!((j.c[1] - 14.0).norm() < 1e-13);
        assert!((j.c[2] - 3.0).norm() < 1e-13);
        assert!(j.c[3].norm() < 1e-13);
    }

    #[test]
    fn cauchy_fallback_agrees_with_exact_jet() {
        let c = C64::new(0.5, 1.0);
        let exact = exp_linear(c);
        let numeric = AnalyticFn::new(move |z| (c * z).exp());
        let z0 = C64::new(0.1, 0.2);
        let a = exact.jet(z0, 5).unwrap();
        let b = numeric.jet(z0, 5).unwrap();
        for k in 0..=5 {
            assert!((a.c[k] - b.c[k]).norm() < 1e-9 * (1.0 + a.c[k].norm()));
        }
    }

    #[test]
    fn evaluation_is_repeatable() {
        let f = exp_linear(C64::new(0.0, 2.0)).mul(&polynomial(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
        let z = C64::new(0.123, -0.456);
        assert_eq!(f.eval(z).re.to_bits(), f.eval(z).re.to_bits());
    }
}
