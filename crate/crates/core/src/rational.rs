//! Exact rational helpers, certified brackets and certified series summation.
//!
//! Every deterministic quantity in this crate is an exact [`Rational`]. When
//! a value is irrational (an exponential, a fractional power) or defined by
//! an infinite sum, it is returned as a [`Bracket`]: a pair of rationals that
//! provably encloses it.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Relative tail tolerance of all certified infinite sums.
pub const SUM_REL_TOL_EXP: i32 = 12;

/// Hard cap on the number of terms of a certified sum.
pub const MAX_SUM_TERMS: usize = 20_000;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn usize_r(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn pow(x: &Rational, k: usize) -> Rational {
    num_traits::pow(x.clone(), k)
}

pub fn factorial(n: usize) -> Rational {
    let mut acc = BigInt::one();
    for m in 2..=n {
        acc *= m;
    }
    Rational::from_integer(acc)
}

/// n (n-1) ... (n-k+1), zero when k > n.
pub fn falling(n: usize, k: usize) -> Rational {
    if k > n {
        return Rational::zero();
    }
    let mut acc = BigInt::one();
    for m in (n - k + 1)..=n {
        acc *= m;
    }
    Rational::from_integer(acc)
}

pub fn binomial(n: usize, k: usize) -> Rational {
    if k > n {
        return Rational::zero();
    }
    falling(n, k) / factorial(k)
}

/// Rising factorial (x)_k = x (x+1) ... (x+k-1).
///
/// Ratios of Gamma functions at rational arguments are always evaluated
/// through this finite product.
pub fn pochhammer(x: &Rational, k: usize) -> Rational {
    let mut acc = Rational::one();
    let mut y = x.clone();
    for _ in 0..k {
        acc *= &y;
        y += Rational::one();
    }
    acc
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Extreme magnitudes: fall back to a scaled ratio.
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"-0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let malformed = || ParseRationalError::Malformed(s.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| malformed())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| malformed())?;
        if den.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let num = BigInt::from_str(&digits).map_err(|_| malformed())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let value = Rational::new(num, den);
        return Ok(if negative { -value } else { value });
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| malformed())
}

/// Canonical `"num/den"` text form (always with a denominator).
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Serde adapter writing rationals as `"num/den"` strings.
pub mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for slices of rationals.
pub mod serde_str_vec {
    use super::{format_rational, Rational};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(format_rational))
    }
}

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Bracket {
    #[serde(with = "serde_str")]
    pub lo: Rational,
    #[serde(with = "serde_str")]
    pub hi: Rational,
}

impl Bracket {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "bracket endpoints out of order");
        Self { lo, hi }
    }

    pub fn exact(x: Rational) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn exact_value(&self) -> Option<&Rational> {
        self.is_exact().then_some(&self.lo)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn midpoint_f64(&self) -> f64 {
        to_f64(&self.midpoint())
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_bracket(&self, other: &Bracket) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Containment of a floating-point reference value, allowing for the
    /// rounding error of the reference itself.
    pub fn contains_f64(&self, x: f64) -> bool {
        let slack = 8.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
        let lo = to_f64(&self.lo);
        let hi = to_f64(&self.hi);
        lo - slack <= x && x <= hi + slack
    }

    pub fn overlaps(&self, other: &Bracket) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn neg(&self) -> Bracket {
        Bracket::new(-&self.hi, -&self.lo)
    }

    pub fn add(&self, other: &Bracket) -> Bracket {
        Bracket::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &Bracket) -> Bracket {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Bracket {
        let a = &self.lo * c;
        let b = &self.hi * c;
        if a <= b {
            Bracket::new(a, b)
        } else {
            Bracket::new(b, a)
        }
    }

    pub fn mul(&self, other: &Bracket) -> Bracket {
        let products =
            [&self.lo * &other.lo, &self.lo * &other.hi, &self.hi * &other.lo, &self.hi * &other.hi];
        let lo = products.iter().min().cloned().unwrap();
        let hi = products.iter().max().cloned().unwrap();
        Bracket::new(lo, hi)
    }

    /// Reciprocal; `None` if the bracket contains zero.
    pub fn recip(&self) -> Option<Bracket> {
        if self.lo.is_positive() || self.hi.is_negative() {
            Some(Bracket::new(self.hi.recip(), self.lo.recip()))
        } else {
            None
        }
    }

    pub fn div(&self, other: &Bracket) -> Option<Bracket> {
        other.recip().map(|r| self.mul(&r))
    }

    pub fn powi(&self, k: usize) -> Bracket {
        (0..k).fold(Bracket::exact(Rational::one()), |acc, _| acc.mul(self))
    }

    /// Widens the endpoints outward onto the grid `10^-digits`, keeping the
    /// enclosure while making the rationals short enough to print.
    pub fn rounded_outward(&self, digits: u32) -> Bracket {
        if self.is_exact() && self.lo.denom() <= &num_traits::pow(BigInt::from(10), digits as usize) {
            return self.clone();
        }
        let scale = Rational::from_integer(num_traits::pow(BigInt::from(10), digits as usize));
        let lo = (&self.lo * &scale).floor() / &scale;
        let hi = (&self.hi * &scale).ceil() / &scale;
        Bracket::new(lo, hi)
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format_rational(&self.lo))
        } else {
            write!(f, "[{}, {}]", format_rational(&self.lo), format_rational(&self.hi))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SumError {
    #[error("certified sum did not reach its tail tolerance within {0} terms")]
    NotConverged(usize),
}

/// Relative tolerance `10^-12` as an exact rational.
pub fn default_rel_tol() -> Rational {
    Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), SUM_REL_TOL_EXP as usize))
}

/// Certified summation of `Σ_{n≥0} term(n)`.
///
/// * `majorant(n)` must bound `|term(n)|` for every `n`.
/// * `ratio_bound(N)` must bound `sup_{m≥N} majorant(m+1)/majorant(m)`, or
///   return `None` when no bound below one is known yet.
///
/// After summing `0..=N` the tail is bounded by the geometric majorant
/// `majorant(N+1) / (1 - ratio_bound(N+1))`; summation stops once that bound is
/// below `rel_tol` times the running sum of absolute values. A majorant that
/// vanishes from some index on (finite state spaces) stops the sum exactly.
pub fn certified_sum(
    term: impl Fn(usize) -> Rational,
    majorant: impl Fn(usize) -> Rational,
    ratio_bound: impl Fn(usize) -> Option<Rational>,
    rel_tol: &Rational,
) -> Result<Bracket, SumError> {
    let mut partial = Rational::zero();
    let mut abs_sum = Rational::zero();
    for n in 0..MAX_SUM_TERMS {
        let t = term(n);
        abs_sum += t.abs();
        partial += t;
        let next = majorant(n + 1);
        if next.is_zero() {
            if let Some(rho) = ratio_bound(n + 1) {
                if rho.is_zero() {
                    return Ok(Bracket::exact(partial));
                }
            }
            continue;
        }
        if let Some(rho) = ratio_bound(n + 1) {
            if rho < Rational::one() {
                let tail = next / (Rational::one() - rho);
                if tail <= &abs_sum * rel_tol {
                    return Ok(Bracket::new(&partial - &tail, &partial + &tail));
                }
            }
        }
    }
    Err(SumError::NotConverged(MAX_SUM_TERMS))
}

/// Sum over a finite index range; always exact.
pub fn finite_sum(range: std::ops::RangeInclusive<usize>, term: impl Fn(usize) -> Rational) -> Rational {
    range.map(term).fold(Rational::zero(), |acc, t| acc + t)
}

/// Certified enclosure of `e^x` for rational `x`.
pub fn exp_bracket(x: &Rational) -> Bracket {
    if x.is_zero() {
        return Bracket::exact(Rational::one());
    }
    if x.is_negative() {
        return exp_bracket(&-x).recip().expect("e^|x| is positive");
    }
    let x = x.clone();
    // Terms x^n/n! are built incrementally to avoid recomputing powers.
    let terms = std::cell::RefCell::new(vec![Rational::one()]);
    let term = |n: usize| {
        let mut t = terms.borrow_mut();
        while t.len() <= n {
            let m = t.len();
            let next = &t[m - 1] * &x / usize_r(m);
            t.push(next);
        }
        t[n].clone()
    };
    let ratio = |n: usize| Some(&x / usize_r(n + 1));
    certified_sum(term, term, ratio, &(default_rel_tol() / int(1000)))
        .expect("exponential series always converges")
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
