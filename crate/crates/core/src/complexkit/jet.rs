//! Truncated Taylor series at a point, `c[k] = f^(k)(z0) / k!`.

use super::C64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<C64>,
}

impl Jet {
    pub fn new(c: Vec<C64>) -> Self {
        assert!(!c.is_empty(), "empty jet");
        Self { c }
    }

    pub fn constant(v: C64, len: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); len];
        c[0] = v;
        Self { c }
    }

    /// Jet of the coordinate function `z` at `z0`.
    pub fn variable(z0: C64, len: usize) -> Self {
        let mut j = Self::constant(z0, len);
        if len > 1 {
            j.c[1] = C64::new(1.0, 0.0);
        }
        j
    }

    /// Build from derivative values `f, f', f'', ...`.
    pub fn from_derivatives(d: &[C64]) -> Self {
        let mut fact = 1.0;
        let c = d
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k > 0 {
                    fact *= k as f64;
                }
                v / fact
            })
            .collect();
        Self { c }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// k-th derivative value.
    pub fn deriv(&self, k: usize) -> C64 {
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        self.c[k] * fact
    }

    pub fn derivatives(&self) -> Vec<C64> {
        (0..self.len()).map(|k| self.deriv(k)).collect()
    }

    /// Jet of f′ (one order shorter).
    pub fn derivative(&self) -> Self {
        if self.len() == 1 {
            return Self::constant(C64::new(0.0, 0.0), 1);
        }
        Self { c: (1..self.len()).map(|k| self.c[k] * k as f64).collect() }
    }

    pub fn truncate(&self, len: usize) -> Self {
        Self { c: self.c[..len.min(self.len())].to_vec() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn recip(&self) -> Self {
        let n = self.len();
        let mut r = vec![C64::new(0.0, 0.0); n];
        r[0] = 1.0 / self.c[0];
        for k in 1..n {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.c[j] * r[k - j];
            }
            r[k] = -s * r[0];
        }
        Self { c: r }
    }

    pub fn div(&self, other: &Jet) -> Self {
        self * &other.recip()
    }

    pub fn powi(&self, p: i32) -> Self {
        if p < 0 {
            return self.recip().powi(-p);
        }
        let mut out = Self::constant(C64::new(1.0, 0.0), self.len());
        for _ in 0..p {
            out = &out * self;
        }
        out
    }

    /// exp of the series, from k·e_k = Σ j·q_j·e_{k−j}.
    pub fn exp(&self) -> Self {
        let n = self.len();
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: C64 = (1..=k).map(|j| self.c[j] * e[k - j] * j as f64).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    /// Evaluate the series at offset `dz` from the centre.
    pub fn eval_at(&self, dz: C64) -> C64 {
        self.c.iter().rev().fold(C64::new(0.0, 0.0), |acc, v| acc * dz + v)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let n = self.len().min(o.len());
        Jet { c: (0..n).map(|k| self.c[k] + o.c[k]).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let n = self.len().min(o.len());
        Jet { c: (0..n).map(|k| self.c[k] - o.c[k]).collect() }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.len().min(o.len());
        let c = (0..n)
            .map(|k| (0..=k).map(|j| self.c[j] * o.c[k - j]).sum())
            .collect();
        Jet { c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { c: self.c.iter().map(|v| -v).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_jet(z0: C64, n: usize) -> Jet {
        Jet::from_derivatives(&vec![z0.exp(); n])
    }

    #[test]
    fn product_rule_matches_closed_form() {
        let z0 = C64::new(0.3, -0.2);
        let z = Jet::variable(z0, 6);
        let e = exp_jet(z0, 6);
        let p = &z * &e;
        // (z e^z)'' = (z + 2) e^z
        assert!((p.deriv(2) - (z0 + 2.0) * z0.exp()).norm() < 1e-13);
    }

    #[test]
    fn reciprocal_inverts() {
        let z0 = C64::new(0.7, 0.4);
        let e = exp_jet(z0, 8);
        let one = &e * &e.recip();
        assert!((one.c[0] - 1.0).norm() < 1e-14);
        assert!(one.c[1..].iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn derivative_shifts() {
        let z0 = C64::new(1.0, 0.0);
        let z3 = Jet::variable(z0, 5).powi(3);
        let d = z3.derivative();
        assert!((d.value() - 3.0).norm() < 1e-14);
        assert!((d.deriv(1) - 6.0).norm() < 1e-14);
    }

    #[test]
    fn eval_recovers_function() {
        let z0 = C64::new(0.0, 0.0);
        let e = exp_jet(z0, 25);
        let dz = C64::new(0.1, 0.2);
        assert!((e.eval_at(dz) - dz.exp()).norm() < 1e-15);
    }

    #[test]
    fn exp_of_variable_is_exp() {
        let z0 = C64::new(0.2, -0.4);
        let e = Jet::variable(z0, 10).exp();
        assert!((&e - &exp_jet(z0, 10)).c.iter().all(|v| v.norm() < 1e-14));
    }
}
