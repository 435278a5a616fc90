//! Differential polynomials in u, u′, u″, … with exact rational coefficients,
//! and the KdV hierarchy built from the Lenard recursion.

use crate::complexkit::C64;
use crate::error::{Result, WlabError};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Highest hierarchy index supported by [`kdv_p`].
pub const MAX_P: usize = 6;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exponent map {derivative order ↦ power}, ordered by weight then by derivative orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Exponents(BTreeMap<u32, u32>);

impl Exponents {
    pub fn weight(&self) -> u32 {
        self.0.iter().map(|(k, e)| (k + 2) * e).sum()
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.0.keys().next_back().copied()
    }

    fn orders_desc(&self) -> Vec<u32> {
        let mut v = Vec::new();
        for (k, e) in self.0.iter().rev() {
            for _ in 0..*e {
                v.push(*k);
            }
        }
        v
    }

    fn mul(&self, other: &Exponents) -> Exponents {
        let mut m = self.0.clone();
        for (k, e) in &other.0 {
            *m.entry(*k).or_insert(0) += e;
        }
        Exponents(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &u32)> {
        self.0.iter()
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| self.orders_desc().cmp(&other.orders_desc()))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single term `coefficient · Π (u^(k))^{e_k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffMonomial {
    pub coefficient: BigRational,
    pub exponents: Exponents,
}

/// Canonical sum of monomials; equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffPoly {
    terms: BTreeMap<Exponents, BigRational>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(Exponents::default(), c);
        p
    }

    /// The jet variable u^(k).
    pub fn u(k: u32) -> Self {
        let mut e = BTreeMap::new();
        e.insert(k, 1);
        let mut p = Self::zero();
        p.add_term(Exponents(e), BigRational::one());
        p
    }

    pub fn from_monomials(ms: impl IntoIterator<Item = DiffMonomial>) -> Self {
        let mut p = Self::zero();
        for m in ms {
            p.add_term(m.exponents, m.coefficient);
        }
        p
    }

    fn add_term(&mut self, e: Exponents, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Monomials in canonical (ascending) order.
    pub fn monomials(&self) -> Vec<DiffMonomial> {
        self.terms
            .iter()
            .map(|(e, c)| DiffMonomial { coefficient: c.clone(), exponents: e.clone() })
            .collect()
    }

    pub fn coefficient_of(&self, e: &Exponents) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn max_order(&self) -> Option<u32> {
        self.terms.keys().filter_map(|e| e.max_order()).max()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut p = Self::zero();
        for (e, v) in &self.terms {
            p.add_term(e.clone(), v * c);
        }
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.clone();
        for (e, v) in &o.terms {
            p.add_term(e.clone(), v.clone());
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&rat(-1)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut p = Self::zero();
        for (ea, va) in &self.terms {
            for (eb, vb) in &o.terms {
                p.add_term(ea.mul(eb), va * vb);
            }
        }
        p
    }

    /// Split by weight.
    fn homogeneous_parts(&self) -> BTreeMap<u32, DiffPoly> {
        let mut parts: BTreeMap<u32, DiffPoly> = BTreeMap::new();
        for (e, v) in &self.terms {
            parts.entry(e.weight()).or_default().add_term(e.clone(), v.clone());
        }
        parts
    }

    /// ∂/∂u^(k), treating jet variables as independent.
    pub fn partial(&self, k: u32) -> Self {
        let mut p = Self::zero();
        for (e, v) in &self.terms {
            if let Some(&pow) = e.0.get(&k) {
                let mut m = e.0.clone();
                if pow == 1 {
                    m.remove(&k);
                } else {
                    m.insert(k, pow - 1);
                }
                p.add_term(Exponents(m), v * rat(pow as i64));
            }
        }
        p
    }

    /// ∂_z by the Leibniz rule: Σ_k (∂p/∂u^(k))·u^(k+1).
    pub fn total_derivative(&self) -> Self {
        let mut out = Self::zero();
        let orders: Vec<u32> = {
            let mut v: Vec<u32> = self.terms.keys().flat_map(|e| e.0.keys().copied()).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        for k in orders {
            out = out.add(&self.partial(k).mul(&Self::u(k + 1)));
        }
        out
    }

    /// q with ∂_z q = self and no constant term, or NotExact.
    pub fn formal_integrate(&self) -> Result<Self> {
        let mut out = Self::zero();
        for (w, part) in self.homogeneous_parts() {
            if w < 3 {
                return Err(WlabError::NotExact);
            }
            let ansatz = monomials_of_weight(w - 1);
            let images: Vec<DiffPoly> = ansatz
                .iter()
                .map(|e| DiffPoly::from_monomials([DiffMonomial { coefficient: BigRational::one(), exponents: e.clone() }]).total_derivative())
                .collect();
            let mut rows: Vec<Exponents> = part.terms.keys().cloned().collect();
            for im in &images {
                rows.extend(im.terms.keys().cloned());
            }
            rows.sort();
            rows.dedup();
            let mut mat: Vec<Vec<BigRational>> = rows
                .iter()
                .map(|r| {
                    let mut row: Vec<BigRational> = images.iter().map(|im| im.coefficient_of(r)).collect();
                    row.push(part.coefficient_of(r));
                    row
                })
                .collect();
            let x = solve_exact(&mut mat, ansatz.len()).ok_or(WlabError::NotExact)?;
            for (e, c) in ansatz.into_iter().zip(x) {
                out.add_term(e, c);
            }
        }
        Ok(out)
    }

    /// Evaluate on jet columns: `jets[k][i]` is u^(k) at sample i.
    pub fn evaluate(&self, jets: &[Vec<C64>]) -> Result<Vec<C64>> {
        let need = self.max_order().map(|k| k as usize + 1).unwrap_or(0);
        if jets.len() < need {
            return Err(WlabError::InsufficientJetOrder { have: jets.len().saturating_sub(1), need: need - 1 });
        }
        let n = jets.first().map(|c| c.len()).unwrap_or(1);
        let terms: Vec<(f64, Vec<(usize, i32)>)> = self
            .terms
            .iter()
            .map(|(e, c)| {
                (
                    c.to_f64().unwrap_or(f64::NAN),
                    e.0.iter().map(|(k, p)| (*k as usize, *p as i32)).collect(),
                )
            })
            .collect();
        Ok((0..n)
            .map(|i| {
                terms
                    .iter()
                    .map(|(c, fs)| fs.iter().fold(C64::new(*c, 0.0), |acc, (k, p)| acc * jets[*k][i].powi(*p)))
                    .sum()
            })
            .collect())
    }
}

fn monomials_of_weight(w: u32) -> Vec<Exponents> {
    fn rec(rem: u32, max_part: u32, cur: &mut Vec<u32>, out: &mut Vec<Exponents>) {
        if rem == 0 {
            let mut m = BTreeMap::new();
            for p in cur.iter() {
                *m.entry(p - 2).or_insert(0) += 1;
            }
            out.push(Exponents(m));
            return;
        }
        for p in (2..=max_part.min(rem)).rev() {
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(w, w, &mut Vec::new(), &mut out);
    out
}

/// Gauss–Jordan on an augmented matrix; free variables set to zero; None if inconsistent.
fn solve_exact(m: &mut [Vec<BigRational>], nvars: usize) -> Option<Vec<BigRational>> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nvars {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let pivot_row = m[r].clone();
                for (v, pv) in m[i].iter_mut().zip(pivot_row.iter()) {
                    *v = &*v - &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if m[r..].iter().any(|row| !row[nvars].is_zero()) {
        return None;
    }
    let mut x = vec![BigRational::zero(); nvars];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i][nvars].clone();
    }
    Some(x)
}

/// 𝒫ₙ(u) from 𝒫₀ = ½ and ∂𝒫_{n+1} = (∂³ + 4u∂ + 2u′)𝒫ₙ.
pub fn kdv_p(n: usize) -> Result<DiffPoly> {
    if n > MAX_P {
        return Err(WlabError::Precondition(format!("hierarchy index {n} exceeds {MAX_P}")));
    }
    let mut p = DiffPoly::constant(BigRational::new(BigInt::from(1), BigInt::from(2)));
    for _ in 0..n {
        p = lenard(&p).formal_integrate()?;
    }
    Ok(p)
}

/// (∂³ + 4u∂ + 2u′) applied to p.
pub fn lenard(p: &DiffPoly) -> DiffPoly {
    let d1 = p.total_derivative();
    let d3 = d1.total_derivative().total_derivative();
    d3.add(&DiffPoly::u(0).mul(&d1).scale(&rat(4)))
        .add(&DiffPoly::u(1).mul(p).scale(&rat(2)))
}

/// ∂u/∂tₙ = −∂_z 𝒫_{n+1}(u).
pub fn flow_rhs(n: usize) -> Result<DiffPoly> {
    if n > 5 {
        return Err(WlabError::Precondition(format!("flow index {n} exceeds 5")));
    }
    Ok(kdv_p(n + 1)?.total_derivative().scale(&rat(-1)))
}

/// Time derivative of `p` along the flow `u_t = f`: Σ_k ∂p/∂u^(k) · ∂_z^k f.
pub fn flow_derivative(p: &DiffPoly, f: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero();
    let mut dkf = f.clone();
    let max = p.max_order().unwrap_or(0);
    for k in 0..=max {
        out = out.add(&p.partial(k).mul(&dkf));
        dkf = dkf.total_derivative();
    }
    out
}

/// ∂_{t_j} F_k − ∂_{t_k} F_j, which vanishes when the flows commute.
pub fn mixed_flow_commutator(j: usize, k: usize) -> Result<DiffPoly> {
    if j == k {
        return Err(WlabError::Precondition("commutator needs distinct flows".into()));
    }
    if j > 3 || k > 3 {
        return Err(WlabError::Precondition("commutator indices are limited to 0..3".into()));
    }
    let (fj, fk) = (flow_rhs(j)?, flow_rhs(k)?);
    Ok(flow_derivative(&fk, &fj).sub(&flow_derivative(&fj, &fk)))
}

fn factor_name(k: u32) -> String {
    match k {
        0..=3 => format!("u{}", "'".repeat(k as usize)),
        _ => format!("u^({k})"),
    }
}

fn fmt_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let factors: Vec<String> = e
                .0
                .iter()
                .map(|(k, p)| if *p == 1 { factor_name(*k) } else { format!("{}^{p}", factor_name(*k)) })
                .collect();
            if factors.is_empty() {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_rational(&mag), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let parse_int = |t: &str| BigInt::from_str(t.trim()).map_err(|e| format!("bad integer {t:?}: {e}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err("zero denominator".into());
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

fn parse_factor(s: &str) -> std::result::Result<(u32, u32), String> {
    let rest = s.strip_prefix('u').ok_or_else(|| format!("factor {s:?} does not start with u"))?;
    let (order, rest) = if let Some(r) = rest.strip_prefix("^(") {
        let close = r.find(')').ok_or("unclosed derivative order")?;
        let k: u32 = r[..close].parse().map_err(|_| format!("bad order in {s:?}"))?;
        (k, &r[close + 1..])
    } else {
        let primes = rest.chars().take_while(|&c| c == '\'').count();
        (primes as u32, &rest[primes..])
    };
    let power = match rest.strip_prefix('^') {
        Some(p) => p.parse().map_err(|_| format!("bad power in {s:?}"))?,
        None if rest.is_empty() => 1,
        None => return Err(format!("trailing text in factor {s:?}")),
    };
    Ok((order, power))
}

impl FromStr for DiffPoly {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let mut p = Self::zero();
        let mut sign = 1;
        let mut rest = s;
        if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r.trim_start();
        }
        loop {
            let next = [rest.find(" + "), rest.find(" - ")].into_iter().flatten().min();
            let (term, tail) = match next {
                Some(i) => (&rest[..i], Some(&rest[i..])),
                None => (rest, None),
            };
            let mut coeff = rat(sign);
            let mut exps: BTreeMap<u32, u32> = BTreeMap::new();
            for piece in term.split('*').map(str::trim) {
                if piece.starts_with('u') {
                    let (k, e) = parse_factor(piece)?;
                    *exps.entry(k).or_insert(0) += e;
                } else {
                    coeff *= parse_rational(piece)?;
                }
            }
            p.add_term(Exponents(exps), coeff);
            match tail {
                None => break,
                Some(t) => {
                    sign = if t.starts_with(" - ") { -1 } else { 1 };
                    rest = &t[3..];
                }
            }
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> DiffPoly {
        s.parse().unwrap()
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p("u^2").total_derivative(), p("2*u*u'"));
        assert_eq!(p("u'' + 3*u^2").total_derivative(), p("u''' + 6*u*u'"));
        assert!(p("1/2").total_derivative().is_zero());
    }

    #[test]
    fn integration_examples() {
        assert_eq!(p("6*u*u'").formal_integrate().unwrap(), p("3*u^2"));
        assert_eq!(p("u''' + 6*u*u'").formal_integrate().unwrap(), p("u'' + 3*u^2"));
        assert_eq!(p("u'*u''").formal_integrate().unwrap(), p("1/2*u'^2"));
        assert_eq!(p("u*u''").formal_integrate(), Err(WlabError::NotExact));
        assert_eq!(p("1").formal_integrate(), Err(WlabError::NotExact));
    }

    #[test]
    fn hierarchy_closed_forms() {
        assert_eq!(kdv_p(0).unwrap(), p("1/2"));
        assert_eq!(kdv_p(1).unwrap(), p("u"));
        assert_eq!(kdv_p(2).unwrap(), p("u'' + 3*u^2"));
        assert_eq!(kdv_p(3).unwrap(), p("u^(4) + 10*u*u'' + 5*u'^2 + 10*u^3"));
    }

    #[test]
    fn flows_closed_forms() {
        assert_eq!(flow_rhs(0).unwrap(), p("-u'"));
        assert_eq!(flow_rhs(1).unwrap(), p("-u''' - 6*u*u'"));
        assert_eq!(flow_rhs(2).unwrap(), p("-u^(5) - 10*u*u''' - 20*u'*u'' - 30*u^2*u'"));
    }

    #[test]
    fn display_matches_conventional_order() {
        assert_eq!(kdv_p(3).unwrap().to_string(), "u^(4) + 10*u*u'' + 5*u'^2 + 10*u^3");
        assert_eq!(flow_rhs(1).unwrap().to_string(), "-u''' - 6*u*u'");
        assert_eq!(DiffPoly::zero().to_string(), "0");
    }

    #[test]
    fn recurrence_holds_through_max() {
        for n in 0..MAX_P {
            let lhs = kdv_p(n + 1).unwrap().total_derivative();
            assert_eq!(lhs, lenard(&kdv_p(n).unwrap()), "n = {n}");
        }
    }

    #[test]
    fn flows_commute() {
        for j in 0..=3 {
            for k in (j + 1)..=3 {
                assert!(mixed_flow_commutator(j, k).unwrap().is_zero(), "({j},{k})");
            }
        }
        assert!(mixed_flow_commutator(1, 1).is_err());
    }

    #[test]
    fn evaluate_on_inverse_square() {
        let zs: Vec<C64> = (0..8).map(|j| C64::new(0.5 + 0.1 * j as f64, 0.3)).collect();
        let jets: Vec<Vec<C64>> = vec![
            zs.iter().map(|z| -2.0 / (z * z)).collect(),
            zs.iter().map(|z| 4.0 / z.powi(3)).collect(),
            zs.iter().map(|z| -12.0 / z.powi(4)).collect(),
        ];
        let u = DiffPoly::u(0).evaluate(&jets).unwrap();
        assert!(u.iter().zip(&zs).all(|(v, z)| (v + 2.0 / (z * z)).norm() < 1e-14));
        let p2 = kdv_p(2).unwrap().evaluate(&jets).unwrap();
        assert!(p2.iter().all(|v| v.norm() < 1e-12));
        let p0 = kdv_p(0).unwrap().evaluate(&jets).unwrap();
        assert!(p0.iter().all(|v| (v - 0.5).norm() == 0.0));
        assert!(matches!(
            kdv_p(3).unwrap().evaluate(&jets),
            Err(WlabError::InsufficientJetOrder { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        for n in 0..=MAX_P {
            let q = kdv_p(n).unwrap();
            assert_eq!(q.to_string().parse::<DiffPoly>().unwrap(), q);
        }
    }
}
