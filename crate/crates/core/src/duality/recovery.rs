//! Recovering `d(k, n)` from the generating identity
//! `Σ_n d(k,n) ν_λ(n) = θ(λ)^k`.

use num_traits::Zero;

use super::{check_range, DualityError};
use crate::measures::MarginalFamily;
use crate::rational::{factorial, Rational};
use crate::series::TruncatedSeries;
use crate::systems::ParticleSystem;

/// `d(k, n) = n!/φ(n) · [λ^n] θ(λ)^k Z_λ` with `θ = a + b λ Z'/Z`.
///
/// Only the power series of `Z_λ` enters, so this works for any system
/// whose `φ` is defined, not only the (σ, β) presets.
pub fn recover_d_from_theta(
    sys: &ParticleSystem,
    a: &Rational,
    b: &Rational,
    k: usize,
    n: usize,
) -> Result<Rational, DualityError> {
    check_range(sys, k, n)?;
    let fam = MarginalFamily::new(sys);
    let order = n as u32 + 1;
    let mut z = TruncatedSeries::zero(1).with_order(order);
    for j in 0..=n {
        if !sys.in_state_space(j) {
            break;
        }
        z.add_term(vec![j as u32], fam.phi(j)? / factorial(j));
    }
    let zinv =
        z.inverse(order).ok_or_else(|| DualityError::InvalidParameter("Z has no constant term".into()))?;
    let log_deriv = z.deriv(0).with_order(order).mul_var(0).mul(&zinv).with_order(order);
    let theta = TruncatedSeries::constant(1, a.clone()).with_order(order) + log_deriv.scale(b);
    let series = theta.pow(k).with_order(order).mul(&z);
    let c = series.coeff(&[n as u32]);
    let phi = fam.phi(n)?;
    if phi.is_zero() {
        return Err(DualityError::VanishingPhi(n));
    }
    Ok(c * factorial(n) / phi)
}
