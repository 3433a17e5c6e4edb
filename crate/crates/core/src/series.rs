//! Multivariate truncated power series with exact rational coefficients.
//!
//! A [`TruncatedSeries`] knows which of its coefficients are exact: with
//! `order = Some(K)` every monomial of total degree `< K` is exact and
//! nothing of degree `>= K` is stored; with `order = None` the series is an
//! exact polynomial. Arithmetic propagates the guaranteed order, so the
//! result of any chain of operations tells you how far it can be trusted.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::rational::{factorial, format_rational, Rational};

pub type Monomial = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
    order: Option<u32>,
}

fn degree(m: &[u32]) -> u32 {
    m.iter().sum()
}

fn min_order(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl TruncatedSeries {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new(), order: None }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![0; nvars];
        m[i] = 1;
        Self::monomial(nvars, m, Rational::one())
    }

    pub fn monomial(nvars: usize, exponents: Monomial, c: Rational) -> Self {
        assert_eq!(exponents.len(), nvars, "monomial arity mismatch");
        let mut s = Self::zero(nvars);
        s.add_term(exponents, c);
        s
    }

    /// Univariate polynomial from its coefficient list `c_0, c_1, ...`.
    pub fn univariate(coeffs: impl IntoIterator<Item = Rational>) -> Self {
        let mut s = Self::zero(1);
        for (j, c) in coeffs.into_iter().enumerate() {
            s.add_term(vec![j as u32], c);
        }
        s
    }

    /// `e^{Σ c_i x_i}` through total degree `< order`.
    pub fn exp_linear(coeffs: &[Rational], order: u32) -> Self {
        let nvars = coeffs.len();
        let mut lin = Self::zero(nvars);
        for (i, c) in coeffs.iter().enumerate() {
            lin = lin + Self::var(nvars, i).scale(c);
        }
        let lin = lin.with_order(order);
        let mut acc = Self::one(nvars).with_order(order);
        let mut power = Self::one(nvars).with_order(order);
        for j in 1..order as usize {
            power = power.mul(&lin);
            if power.is_zero() {
                break;
            }
            acc = acc + power.scale(&(Rational::one() / factorial(j)));
        }
        acc
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> Option<u32> {
        self.order
    }

    pub fn is_polynomial(&self) -> bool {
        self.order.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &[u32]) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Highest total degree present (0 for the zero series).
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| degree(m)).max().unwrap_or(0)
    }

    /// Lowest total degree that may be nonzero, counting the unknown tail.
    fn low_degree(&self) -> u32 {
        let known = self.terms.keys().map(|m| degree(m)).min();
        match (known, self.order) {
            (Some(k), Some(o)) => k.min(o),
            (Some(k), None) => k,
            (None, Some(o)) => o,
            (None, None) => u32::MAX,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        debug_assert_eq!(m.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        if let Some(o) = self.order {
            if degree(&m) >= o {
                return;
            }
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    /// Restricts the guaranteed order to `min(current, order)`.
    pub fn with_order(mut self, order: u32) -> Self {
        let o = min_order(self.order, Some(order)).unwrap();
        self.order = Some(o);
        self.terms.retain(|m, _| degree(m) < o);
        self
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self { nvars: self.nvars, terms: BTreeMap::new(), order: self.order };
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
            order: self.order,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "series arity mismatch");
        let order = match (self.order, other.order) {
            (None, None) => None,
            (Some(a), None) => Some(a.saturating_add(other.low_degree())),
            (None, Some(b)) => Some(b.saturating_add(self.low_degree())),
            (Some(a), Some(b)) => {
                Some(a.saturating_add(other.low_degree()).min(b.saturating_add(self.low_degree())))
            }
        };
        let mut out = Self { nvars: self.nvars, terms: BTreeMap::new(), order };
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::one(self.nvars), |acc, _| acc.mul(self))
    }

    /// Multiplies by the variable `x_i`.
    pub fn mul_var(&self, i: usize) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut m = m.clone();
                    m[i] += 1;
                    (m, c.clone())
                })
                .collect(),
            order: self.order.map(|o| o + 1),
        }
    }

    /// Partial derivative in `x_i`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self {
            nvars: self.nvars,
            terms: BTreeMap::new(),
            order: self.order.map(|o| o.saturating_sub(1)),
        };
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut d = m.clone();
            d[i] -= 1;
            out.add_term(d, c * Rational::from_integer(m[i].into()));
        }
        out
    }

    /// Inverse of a series with nonzero constant term, through `order`.
    pub fn inverse(&self, order: u32) -> Option<Self> {
        let a0 = self.coeff(&vec![0; self.nvars]);
        if a0.is_zero() {
            return None;
        }
        let inv0 = a0.recip();
        let base = self.clone().with_order(order);
        let rest = (base - Self::constant(self.nvars, a0)).scale(&inv0);
        let neg_rest = rest.scale(&-Rational::one());
        let mut acc = Self::one(self.nvars).with_order(order);
        let mut power = Self::one(self.nvars).with_order(order);
        for _ in 1..order {
            power = power.mul(&neg_rest);
            if power.is_zero() {
                break;
            }
            acc = acc + power.clone();
        }
        Some(acc.scale(&inv0))
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.nvars);
        self.terms.iter().fold(Rational::zero(), |acc, (m, c)| {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(m) {
                t *= num_traits::pow(x.clone(), e as usize);
            }
            acc + t
        })
    }

    /// Embeds into a larger variable set; variable `i` becomes `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.nvars);
        let mut out = Self { nvars, terms: BTreeMap::new(), order: self.order };
        for (m, c) in &self.terms {
            let mut e = vec![0; nvars];
            for (i, &p) in m.iter().enumerate() {
                e[map[i]] += p;
            }
            out.add_term(e, c.clone());
        }
        out
    }

    /// Substitutes `x_i -> scale_i * x_i` coefficient-wise.
    pub fn rescale_vars(&self, scales: &[Rational]) -> Self {
        let mut out = Self { nvars: self.nvars, terms: BTreeMap::new(), order: self.order };
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (s, &e) in scales.iter().zip(m) {
                t *= num_traits::pow(s.clone(), e as usize);
            }
            out.add_term(m.clone(), t);
        }
        out
    }

    /// True when `self` and `other` agree on every coefficient both of them
    /// guarantee.
    pub fn agrees_with(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_zero()
    }

    /// Exponential generating coefficient: `n! [x^n] self` for a multi-index.
    pub fn taylor_derivative(&self, n: &[u32]) -> Rational {
        let mut c = self.coeff(n);
        for &e in n {
            c *= factorial(e as usize);
        }
        c
    }
}

impl std::ops::Add for TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.nvars, rhs.nvars, "series arity mismatch");
        let order = min_order(self.order, rhs.order);
        let mut out = Self { nvars: self.nvars, terms: BTreeMap::new(), order };
        for (m, c) in self.terms.into_iter().chain(rhs.terms) {
            out.add_term(m, c);
        }
        out
    }
}

impl std::ops::Sub for TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(&-Rational::one())
    }
}

impl std::ops::Neg for TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> Self {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", format_rational(c))?;
            for (i, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{e}")?,
                }
            }
        }
        if let Some(o) = self.order {
            write!(f, " + O(deg {o})")?;
        }
        Ok(())
    }
}

/// Falling-factorial coefficients of a function of `n`: given the values
/// `f(0..=deg)` of a polynomial of degree `<= deg`, returns `c_r` with
/// `f(n) = Σ_r c_r n(n-1)...(n-r+1)`, via Newton forward differences.
pub fn falling_factorial_coefficients(values: &[Rational]) -> Vec<Rational> {
    let mut diffs = values.to_vec();
    let mut out = Vec::with_capacity(values.len());
    for r in 0..values.len() {
        out.push(&diffs[0] / factorial(r));
        diffs = diffs.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn small_poly(nvars: usize, coeffs: &[(Vec<u32>, i64)]) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(nvars);
        for (m, c) in coeffs {
            s.add_term(m.clone(), int(*c));
        }
        s
    }

    #[test]
    fn truncated_product_order() {
        let a = TruncatedSeries::one(1).with_order(5);
        let z = TruncatedSeries::var(1, 0);
        let p = a.mul(&z);
        assert_eq!(p.order(), Some(6));
        let d = p.deriv(0);
        assert_eq!(d.order(), Some(5));
    }

    #[test]
    fn exp_times_exp_neg_is_one() {
        let e = TruncatedSeries::exp_linear(&[int(1), int(2)], 8);
        let f = TruncatedSeries::exp_linear(&[int(-1), int(-2)], 8);
        let p = e.mul(&f);
        assert!(p.agrees_with(&TruncatedSeries::one(2)));
        assert_eq!(p.order(), Some(8));
    }

    #[test]
    fn inverse_of_one_minus_x() {
        let s = TruncatedSeries::univariate([int(1), int(-1)]);
        let inv = s.inverse(6).unwrap();
        for j in 0..6 {
            assert_eq!(inv.coeff(&[j]), int(1));
        }
        assert_eq!(inv.order(), Some(6));
    }

    #[test]
    fn derivative_of_exp_is_itself() {
        let e = TruncatedSeries::exp_linear(&[ratio(1, 3)], 10);
        let d = e.deriv(0);
        assert!(d.agrees_with(&e.scale(&ratio(1, 3))));
    }

    #[test]
    fn falling_coefficients_of_square() {
        // n^2 = n(n-1) + n
        let vals: Vec<_> = (0..3).map(|n| int(n * n)).collect();
        let c = falling_factorial_coefficients(&vals);
        assert_eq!(c, vec![int(0), int(1), int(1)]);
    }

    proptest! {
        #[test]
        fn product_rule(a in proptest::collection::vec(-5i64..5, 1..5),
                        b in proptest::collection::vec(-5i64..5, 1..5)) {
            let pa = TruncatedSeries::univariate(a.iter().map(|&c| int(c)));
            let pb = TruncatedSeries::univariate(b.iter().map(|&c| int(c)));
            let lhs = pa.mul(&pb).deriv(0);
            let rhs = pa.deriv(0).mul(&pb) + pa.mul(&pb.deriv(0));
            prop_assert!(lhs.agrees_with(&rhs));
        }

        #[test]
        fn multiplication_commutes(c1 in -4i64..4, c2 in -4i64..4, e1 in 0u32..3, e2 in 0u32..3) {
            let p = small_poly(2, &[(vec![e1, 0], c1), (vec![0, 1], 1)]);
            let q = small_poly(2, &[(vec![1, e2], c2), (vec![0, 0], 2)]);
            prop_assert_eq!(p.mul(&q), q.mul(&p));
        }
    }
}
