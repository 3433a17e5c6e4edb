//! Single-site functions with a continuum variable: `d(k, z)` and `d(v, z)`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::discrete::phi_sb;
use super::{sigma_beta, DualityError, Family, SigmaBeta};
use crate::measures::MarginalFamily;
use crate::rational::{binomial, factorial, int, pochhammer, pow, Bracket, Rational};
use crate::series::TruncatedSeries;
use crate::systems::{DiffusionSystem, ParticleSystem};

/// `prefactor · e^{Σ exponent_i x_i} · body`.
///
/// The exponential marker always depends on conserved quantities only (or
/// is absent), so it is carried separately instead of being expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct Marked {
    pub prefactor: Bracket,
    pub exponent: Vec<Rational>,
    pub body: TruncatedSeries,
}

impl Marked {
    pub fn plain(body: TruncatedSeries) -> Self {
        Self {
            prefactor: Bracket::exact(Rational::one()),
            exponent: vec![Rational::zero(); body.nvars()],
            body,
        }
    }

    pub fn has_marker(&self) -> bool {
        self.exponent.iter().any(|c| !c.is_zero())
    }

    /// `e^{exponent · x} · body` as one series through total degree `< order`
    /// (the prefactor is left out).
    pub fn expanded(&self, order: u32) -> TruncatedSeries {
        if !self.has_marker() {
            return self.body.clone().with_order(order);
        }
        TruncatedSeries::exp_linear(&self.exponent, order).mul(&self.body)
    }
}

impl fmt::Display for Marked {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefactor.is_exact() || !self.prefactor.lo.is_one() {
            write!(f, "{} * ", self.prefactor)?;
        }
        if self.has_marker() {
            write!(f, "exp(")?;
            let mut first = true;
            for (i, c) in self.exponent.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "({c})*x{i}")?;
            }
            write!(f, ") * ")?;
        }
        write!(f, "[{}]", self.body)
    }
}

fn check_k(sys: &ParticleSystem, k: usize) -> Result<(), DualityError> {
    if sys.in_state_space(k) {
        Ok(())
    } else {
        Err(DualityError::OutOfRange { k, n: 0 })
    }
}

/// `Σ_{r ≤ k} C(k,r) a^{k−r} (bβ)^r z^r / φ(r)`, with `r` also bounded by
/// the cap. For SIP(α) this is `a^k ₁F₁(−k; α; −bαz/a)`, for IRW
/// `(a + bz)^k`, for SEP(γ) `a^k ₁F₁(−k; −γ; bγz/a)`.
pub(crate) fn mid_polynomial(p: &SigmaBeta, a: &Rational, b: &Rational, k: usize) -> TruncatedSeries {
    let bb = b * &p.beta;
    let mut rmax = k;
    if let Some(c) = p.cap {
        rmax = rmax.min(c);
    }
    let mut s = TruncatedSeries::zero(1);
    for r in 0..=rmax {
        let c = binomial(k, r) * pow(a, k - r) * pow(&bb, r) / phi_sb(p, r);
        s.add_term(vec![r as u32], c);
    }
    s
}

/// Middle-column function `d(k, z)` of the reference tables.
pub fn mid_column(sys: &ParticleSystem, family: &Family, k: usize) -> Result<Marked, DualityError> {
    let p = sigma_beta(sys)?;
    check_k(sys, k)?;
    Ok(match family {
        Family::Classical => {
            let b = p.beta.recip();
            Marked::plain(mid_polynomial(&p, &Rational::zero(), &b, k))
        }
        Family::Orthogonal { a, b } => Marked::plain(mid_polynomial(&p, a, b, k)),
        Family::Trivial { a } => Marked::plain(TruncatedSeries::constant(1, pow(a, k))),
        Family::Cheap { lambda } => {
            let fam = MarginalFamily::new(sys);
            let c = Rational::one() / (pow(lambda, k) * fam.phi(k)?);
            Marked {
                prefactor: fam.partition(lambda)?,
                exponent: vec![-Rational::one()],
                body: TruncatedSeries::monomial(1, vec![k as u32], c),
            }
        }
    })
}

/// `Σ_r s^r (vz)^r / (r! φ(r))` in variables `(v, z)`, through total degree
/// `< order`; exact when the cap ends the sum first.
fn right_body(p: &SigmaBeta, s: &Rational, order: u32) -> TruncatedSeries {
    let mut body = TruncatedSeries::zero(2);
    let mut r = 0usize;
    loop {
        if p.cap.is_some_and(|c| r > c) {
            return body;
        }
        if 2 * r as u32 >= order {
            return body.with_order(order);
        }
        let c = pow(s, r) / (factorial(r) * phi_sb(p, r));
        body.add_term(vec![r as u32, r as u32], c);
        r += 1;
    }
}

/// Right-column function `d(v, z)` of the reference tables, variables
/// `(v, z)` in that order.
pub fn right_column(sys: &ParticleSystem, family: &Family, order: u32) -> Result<Marked, DualityError> {
    let p = sigma_beta(sys)?;
    if order == 0 {
        return Err(DualityError::OrderTooSmall(order));
    }
    let one = Rational::one();
    Ok(match family {
        Family::Classical => Marked {
            prefactor: Bracket::exact(one.clone()),
            exponent: vec![-one.clone(), Rational::zero()],
            body: right_body(&p, &one, order),
        },
        Family::Orthogonal { a, b } => Marked {
            prefactor: Bracket::exact(one.clone()),
            exponent: vec![a - &one, Rational::zero()],
            body: right_body(&p, &(b * &p.beta), order),
        },
        Family::Trivial { a } => Marked {
            prefactor: Bracket::exact(one.clone()),
            exponent: vec![a - &one, Rational::zero()],
            body: TruncatedSeries::one(2),
        },
        Family::Cheap { lambda } => Marked {
            prefactor: MarginalFamily::new(sys).partition(lambda)?,
            exponent: vec![-one.clone(), -one.clone()],
            body: right_body(&p, &lambda.recip(), order),
        },
    })
}

/// Inverse Laplace route for SIP(α)/BEP(α): expands `(aλ + bα)^k λ^{−α−k}`
/// binomially, maps `λ^{−α−m} ↦ z^{α+m−1}/Γ(α+m)` and divides by
/// `z^{α−1}/Γ(α)`, giving `Σ_m C(k,m) a^{k−m} (bα)^m z^m / (α)_m`.
pub fn laplace_recover(
    alpha: &Rational,
    a: &Rational,
    b: &Rational,
    k: usize,
) -> Result<TruncatedSeries, DualityError> {
    if !alpha.is_positive() {
        return Err(DualityError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let mut s = TruncatedSeries::zero(1);
    for j in 0..=k {
        // term C(k,j) (aλ)^j (bα)^{k−j} λ^{−α−k} = ... λ^{−α−(k−j)}
        let m = k - j;
        let c = binomial(k, j) * pow(a, j) * pow(&(b * alpha), m) / pochhammer(alpha, m);
        s.add_term(vec![m as u32], c);
    }
    Ok(s)
}

/// The continuum families `e^{cvz}` (σ = 0) and `₀F₁(−; β/σ; cvz)`
/// (σ ≠ 0), variables `(v, z)`. When `β/σ = −N` the hypergeometric series
/// is cut to the finite sum over `r ≤ N`; that polynomial is *not* a
/// self-duality function of `𝓛^{σ,β}` (see
/// [`selfdual_continuum_regularized`] for the one that is).
pub fn selfdual_continuum_d(
    dsys: &DiffusionSystem,
    c: &Rational,
    order: u32,
) -> Result<TruncatedSeries, DualityError> {
    if order < 4 {
        return Err(DualityError::OrderTooSmall(order));
    }
    let lower = (!dsys.sigma.is_zero()).then(|| &dsys.beta / &dsys.sigma);
    let cap = lower.as_ref().and_then(|l| {
        (l.is_negative() && l.is_integer()).then(|| (-l).to_integer().try_into().unwrap_or(usize::MAX))
    });
    let mut body = TruncatedSeries::zero(2);
    let mut r = 0usize;
    loop {
        if cap.is_some_and(|n: usize| r > n) {
            return Ok(body);
        }
        if 2 * r as u32 >= order {
            return Ok(body.with_order(order));
        }
        let den = match &lower {
            None => factorial(r),
            Some(l) => factorial(r) * pochhammer(l, r),
        };
        body.add_term(vec![r as u32, r as u32], pow(c, r) / den);
        r += 1;
    }
}

/// Regularized `₀F̃₁(−; −N; cvz) = Σ_{r > N} (cvz)^r / (r! (r−N−1)!)`, the
/// continuation of `₀F₁(−; b; cvz)/Γ(b)` to `b = −N`, for `dsys` with
/// `β/σ = −N`. It vanishes to order `2(N+1)` at the origin, so it is not
/// normalized like the other families.
pub fn selfdual_continuum_regularized(
    dsys: &DiffusionSystem,
    c: &Rational,
    order: u32,
) -> Result<TruncatedSeries, DualityError> {
    if order < 4 {
        return Err(DualityError::OrderTooSmall(order));
    }
    let lower = (!dsys.sigma.is_zero()).then(|| &dsys.beta / &dsys.sigma);
    let n = match lower {
        Some(l) if l.is_integer() && !l.is_positive() => (-l).to_integer().try_into().unwrap_or(usize::MAX),
        _ => {
            return Err(DualityError::InvalidParameter(
                "regularized family needs beta/sigma a nonpositive integer".into(),
            ))
        }
    };
    let mut body = TruncatedSeries::zero(2);
    let mut r = n + 1;
    while 2 * (r as u32) < order {
        body.add_term(vec![r as u32, r as u32], pow(c, r) / (factorial(r) * factorial(r - n - 1)));
        r += 1;
    }
    Ok(body.with_order(order))
}

/// `₁F₁(−k; c; x z)` as a polynomial in `z`, summed directly from its
/// hypergeometric definition.
pub fn hyp1f1_terminating(k: usize, c: &Rational, x: &Rational) -> TruncatedSeries {
    let mut s = TruncatedSeries::zero(1);
    for r in 0..=k {
        let num = pochhammer(&-int(k as i64), r);
        let den = pochhammer(c, r) * factorial(r);
        if den.is_zero() {
            break;
        }
        s.add_term(vec![r as u32], num / den * pow(x, r));
    }
    s
}
