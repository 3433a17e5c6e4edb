//! Single-site duality functions, their factorized products, and the two
//! recovery mechanisms (Taylor coefficients of `θ(λ)^k Z_λ`, inverse
//! Laplace transform).

mod continuum;
mod discrete;
mod recovery;

pub use continuum::{
    hyp1f1_terminating, laplace_recover, mid_column, right_column, selfdual_continuum_d,
    selfdual_continuum_regularized, Marked,
};
pub use discrete::{
    cheap_d, cheap_d_unnormalized, classical_d, growth_constant, hypergeometric_d, matching_family,
    orthogonal_d, recurrence_d, trivial_d, PolynomialFamily,
};
pub use recovery::recover_d_from_theta;

pub(crate) use discrete::hypergeometric_extended;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::measures::{MarginalFamily, MeasureError};
use crate::rational::{format_rational, Bracket, Rational};
use crate::systems::{ParticleSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DualityError {
    #[error("index ({k}, {n}) lies outside the state space")]
    OutOfRange { k: usize, n: usize },
    #[error("system {0} is not of the (sigma, beta) form")]
    NotSigmaBeta(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("evaluation routes disagree at (k, n) = ({k}, {n}): {sum} vs {recurrence}")]
    RouteMismatch { k: usize, n: usize, sum: String, recurrence: String },
    #[error("signature mismatch: expected {expected:?}, got {got:?}")]
    SignatureMismatch { expected: Signature, got: Signature },
    #[error("series order {0} too small")]
    OrderTooSmall(u32),
    #[error("phi({0}) vanishes")]
    VanishingPhi(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Which family a single-site function belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `n!/(n−k)! / φ(k)`, normalized so that `θ(λ) = λ/(1−σλ)`.
    Classical,
    /// First function `d(1,n) = a + b n`.
    Orthogonal {
        #[serde(with = "crate::rational::serde_str")]
        a: Rational,
        #[serde(with = "crate::rational::serde_str")]
        b: Rational,
    },
    /// `1{k=n} / ν_λ(k)`.
    Cheap {
        #[serde(with = "crate::rational::serde_str")]
        lambda: Rational,
    },
    /// `a^k`.
    Trivial {
        #[serde(with = "crate::rational::serde_str")]
        a: Rational,
    },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Classical => "classical".into(),
            Family::Orthogonal { a, b } => {
                format!("orthogonal(a={}, b={})", format_rational(a), format_rational(b))
            }
            Family::Cheap { lambda } => format!("cheap(lambda={})", format_rational(lambda)),
            Family::Trivial { a } => format!("trivial(a={})", format_rational(a)),
        }
    }
}

/// Variable types of a single-site function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    /// `d(k, n)`, both discrete.
    Discrete,
    /// `d(k, z)`, discrete dual, continuum original.
    DiscreteContinuum,
    /// `d(v, z)`, both continuum.
    Continuum,
}

/// A single-site duality function tagged by system, family and signature.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSiteDuality {
    system: ParticleSystem,
    family: Family,
    signature: Signature,
}

impl SingleSiteDuality {
    pub fn new(system: &ParticleSystem, family: Family, signature: Signature) -> Result<Self, DualityError> {
        match &family {
            Family::Orthogonal { b, .. } if b.is_zero() => {
                return Err(DualityError::InvalidParameter("orthogonal family needs b != 0".into()))
            }
            Family::Cheap { lambda } => MarginalFamily::new(system).check_lambda(lambda)?,
            _ => {}
        }
        if signature != Signature::Discrete || !matches!(family, Family::Trivial { .. }) {
            sigma_beta(system)?;
        }
        Ok(Self { system: system.clone(), family, signature })
    }

    pub fn discrete(system: &ParticleSystem, family: Family) -> Result<Self, DualityError> {
        Self::new(system, family, Signature::Discrete)
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.system
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn with_signature(&self, signature: Signature) -> Self {
        Self { signature, ..self.clone() }
    }

    fn expect(&self, s: Signature) -> Result<(), DualityError> {
        if self.signature != s {
            return Err(DualityError::SignatureMismatch { expected: s, got: self.signature });
        }
        Ok(())
    }

    /// `d(k, n)`; brackets only arise for the cheap family.
    pub fn eval(&self, k: usize, n: usize) -> Result<Bracket, DualityError> {
        self.expect(Signature::Discrete)?;
        match &self.family {
            Family::Cheap { lambda } => cheap_d(&self.system, lambda, k, n),
            _ => Ok(Bracket::exact(self.eval_exact(k, n)?)),
        }
    }

    /// Exact representative of `d(k, n)`. For the cheap family this drops
    /// the site-independent constant `Z_λ`, which rescales every factorized
    /// function on a fixed site set by the same `Z_λ^{|V|}`.
    pub fn eval_exact(&self, k: usize, n: usize) -> Result<Rational, DualityError> {
        self.expect(Signature::Discrete)?;
        match &self.family {
            Family::Classical => classical_d(&self.system, k, n),
            Family::Orthogonal { a, b } => orthogonal_d(&self.system, a, b, k, n),
            Family::Cheap { lambda } => cheap_d_unnormalized(&self.system, lambda, k, n),
            Family::Trivial { a } => {
                check_range(&self.system, k, n)?;
                Ok(trivial_d(a, k, n))
            }
        }
    }

    /// `d(k, ·)` as a marked polynomial in `z`.
    pub fn eval_mid(&self, k: usize) -> Result<Marked, DualityError> {
        self.expect(Signature::DiscreteContinuum)?;
        mid_column(&self.system, &self.family, k)
    }

    /// `d(v, z)` as a marked series in `(v, z)` through total degree `< order`.
    pub fn eval_right(&self, order: u32) -> Result<Marked, DualityError> {
        self.expect(Signature::Continuum)?;
        right_column(&self.system, &self.family, order)
    }
}

pub(crate) struct SigmaBeta {
    pub sigma: Rational,
    pub beta: Rational,
    pub cap: Option<usize>,
}

pub(crate) fn sigma_beta(sys: &ParticleSystem) -> Result<SigmaBeta, DualityError> {
    let (sigma, beta) = sys.sigma_beta_params().ok_or_else(|| DualityError::NotSigmaBeta(sys.name()))?;
    Ok(SigmaBeta { sigma, beta, cap: sys.cap() })
}

pub(crate) fn check_range(sys: &ParticleSystem, k: usize, n: usize) -> Result<(), DualityError> {
    if sys.in_state_space(k) && sys.in_state_space(n) {
        Ok(())
    } else {
        Err(DualityError::OutOfRange { k, n })
    }
}

/// `D(ξ, η) = Π_x d(ξ_x, η_x)`.
pub fn factorized_d(d: &SingleSiteDuality, xi: &[usize], eta: &[usize]) -> Result<Bracket, DualityError> {
    if xi.len() != eta.len() {
        return Err(DualityError::InvalidParameter(format!(
            "xi has {} sites, eta has {}",
            xi.len(),
            eta.len()
        )));
    }
    let mut acc = Bracket::exact(Rational::one());
    for (&k, &n) in xi.iter().zip(eta) {
        acc = acc.mul(&d.eval(k, n)?);
    }
    Ok(acc)
}

/// Exact product of [`SingleSiteDuality::eval_exact`] values.
pub fn factorized_d_exact(
    d: &SingleSiteDuality,
    xi: &[usize],
    eta: &[usize],
) -> Result<Rational, DualityError> {
    if xi.len() != eta.len() {
        return Err(DualityError::InvalidParameter(format!(
            "xi has {} sites, eta has {}",
            xi.len(),
            eta.len()
        )));
    }
    let mut acc = Rational::one();
    for (&k, &n) in xi.iter().zip(eta) {
        let v = d.eval_exact(k, n)?;
        if v.is_zero() {
            return Ok(v);
        }
        acc *= v;
    }
    Ok(acc)
}
