//! `∫ D(ξ, η) μ_λ(dη) = θ(λ)^{|ξ|}` for stationary product measures.

use num_traits::{One, Zero};
use serde::Serialize;

use super::VerifyError;
use crate::duality::{cheap_d, growth_constant, DualityError, Family, SingleSiteDuality};
use crate::measures::MarginalFamily;
use crate::rational::{pow, Bracket, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryReport {
    /// Certified enclosure of `Π_x ∫ d(ξ_x, ·) dν_λ`.
    pub integral: Bracket,
    /// `θ(λ)^{|ξ|}`.
    pub theta_power: Bracket,
    pub agrees: bool,
    pub width: f64,
}

/// `θ(λ) = ∫ d(1, ·) dν_λ` for a preset family.
pub fn theta_of(d: &SingleSiteDuality, lambda: &Rational) -> Result<Bracket, VerifyError> {
    let sys = d.system();
    let fam = MarginalFamily::new(sys);
    Ok(match d.family() {
        Family::Classical => {
            let (_, beta) = sys.sigma_beta_params().ok_or_else(|| DualityError::NotSigmaBeta(sys.name()))?;
            fam.theta(&Rational::zero(), &beta.recip(), lambda)?
        }
        Family::Orthogonal { a, b } => fam.theta(a, b, lambda)?,
        Family::Trivial { a } => {
            fam.check_lambda(lambda)?;
            Bracket::exact(a.clone())
        }
        Family::Cheap { lambda: l } => {
            if l != lambda {
                return Err(VerifyError::InvalidInput(format!(
                    "cheap family built for lambda = {l}, measure has {lambda}"
                )));
            }
            Bracket::exact(Rational::one())
        }
    })
}

fn site_integral(d: &SingleSiteDuality, lambda: &Rational, k: usize) -> Result<Bracket, VerifyError> {
    let sys = d.system();
    let fam = MarginalFamily::new(sys);
    if k == 0 {
        fam.check_lambda(lambda)?;
        return Ok(Bracket::exact(Rational::one()));
    }
    let (a, b) = match d.family() {
        Family::Cheap { lambda: l } => {
            let w = fam.nu(lambda, k)?;
            return Ok(w.mul(&cheap_d(sys, l, k, k)?));
        }
        Family::Trivial { a } => {
            let c = pow(a, k);
            return Ok(fam.expectation(lambda, |_| c.clone(), 0, &num_traits::Signed::abs(&c))?);
        }
        Family::Classical => {
            let (_, beta) = sys.sigma_beta_params().ok_or_else(|| DualityError::NotSigmaBeta(sys.name()))?;
            (Rational::zero(), beta.recip())
        }
        Family::Orthogonal { a, b } => (a.clone(), b.clone()),
    };
    let c = growth_constant(sys, &a, &b, k)?;
    let cap = sys.cap();
    let g = |n: usize| {
        if cap.is_some_and(|m| n > m) {
            return Rational::zero();
        }
        d.eval_exact(k, n).expect("k and n lie in the state space")
    };
    Ok(fam.expectation(lambda, g, k, &c)?)
}

/// Compares `Π_x ∫ d(ξ_x, ·) dν_λ`, each factor a certified sum, with
/// `θ(λ)^{|ξ|}`.
pub fn stationary_relation_check(
    d: &SingleSiteDuality,
    lambda: &Rational,
    xi: &[usize],
) -> Result<StationaryReport, VerifyError> {
    let theta = theta_of(d, lambda)?;
    let mut integral = Bracket::exact(Rational::one());
    for &k in xi {
        if !d.system().in_state_space(k) {
            return Err(DualityError::OutOfRange { k, n: 0 }.into());
        }
        integral = integral.mul(&site_integral(d, lambda, k)?);
    }
    let total: usize = xi.iter().sum();
    let theta_power = theta.powi(total);
    let agrees = match theta_power.exact_value() {
        Some(t) => integral.contains(t),
        None => integral.overlaps(&theta_power),
    };
    let width = crate::rational::to_f64(&integral.width());
    Ok(StationaryReport { integral, theta_power, agrees, width })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::systems::ParticleSystem;

    #[test]
    fn examples() {
        let irw = ParticleSystem::irw();
        let d = SingleSiteDuality::discrete(&irw, Family::Classical).unwrap();
        let r = stationary_relation_check(&d, &int(1), &[]).unwrap();
        assert!(r.agrees && r.integral.is_exact());
        let r = stationary_relation_check(&d, &int(1), &[2]).unwrap();
        assert!(r.agrees && r.width < 1e-10, "{r:?}");
        let sip = ParticleSystem::sip(int(2)).unwrap();
        let d = SingleSiteDuality::discrete(&sip, Family::Orthogonal { a: int(1), b: ratio(-1, 2) }).unwrap();
        let r = stationary_relation_check(&d, &ratio(1, 2), &[1, 1]).unwrap();
        // θ = 1 − (1/2)·2·(1/2)/(1/2) = 0
        assert_eq!(r.theta_power, Bracket::exact(int(0)));
        assert!(r.agrees, "{r:?}");
    }

    #[test]
    fn wrong_theta_is_rejected() {
        let sip = ParticleSystem::sip(int(1)).unwrap();
        let d = SingleSiteDuality::discrete(&sip, Family::Classical).unwrap();
        let r = stationary_relation_check(&d, &ratio(1, 4), &[2, 1]).unwrap();
        assert!(r.agrees);
        let wrong = Bracket::exact(pow(&ratio(1, 4), 3));
        assert!(!r.integral.contains(wrong.exact_value().unwrap()));
    }
}
