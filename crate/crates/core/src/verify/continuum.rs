//! Self-duality of the continuum operators `𝓛^{σ,β}`.

use num_traits::{One, Signed};

use super::VerifyError;
use crate::duality::{selfdual_continuum_d, selfdual_continuum_regularized, DualityError};
use crate::kernel::RateKernel;
use crate::rational::{factorial, pochhammer, pow, Rational};
use crate::series::TruncatedSeries;
use crate::systems::DiffusionSystem;

/// Which single-site function enters [`selfduality_residual_continuum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuumFamily {
    /// `e^{cvz}`, `₀F₁(−; β/σ; cvz)`, cut at `r ≤ N` when `β/σ = −N`.
    Standard,
    /// The regularized `₀F̃₁(−; −N; cvz)`.
    Regularized,
}

/// `𝓛_v 𝒟 − 𝓛_z 𝒟` for `𝒟(v, z) = Π_x d(v_x, z_x)` with `d` a family of
/// `dsys`.
///
/// Variables are `(v_1..v_n, z_1..z_n)`. The result is exact through total
/// degree `< order` (its own order may be larger when `d` vanishes at the
/// origin); the identity holds iff it is zero.
pub fn selfduality_residual_continuum(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    family: ContinuumFamily,
    c: &Rational,
    order: u32,
) -> Result<TruncatedSeries, VerifyError> {
    let d = match family {
        ContinuumFamily::Standard => selfdual_continuum_d(dsys, c, order)?,
        ContinuumFamily::Regularized => selfdual_continuum_regularized(dsys, c, order)?,
    };
    let n = kernel.len();
    let mut prod = TruncatedSeries::one(2 * n);
    for x in 0..n {
        prod = prod.mul(&d.embed(2 * n, &[x, n + x]));
    }
    let prod = prod.with_order(order);
    let v_vars: Vec<usize> = (0..n).collect();
    let z_vars: Vec<usize> = (n..2 * n).collect();
    let lv = dsys.apply_on(kernel, &prod, &v_vars)?;
    let lz = dsys.apply_on(kernel, &prod, &z_vars)?;
    Ok(lv - lz)
}

/// `F(b) = ₀F₁(−; b; cvz)` as a series in `(v, z)` through degree `< order`.
fn f01(b: &Rational, c: &Rational, order: u32) -> TruncatedSeries {
    let mut s = TruncatedSeries::zero(2);
    let mut r = 0usize;
    while 2 * (r as u32) < order {
        let e = r as u32;
        s.add_term(vec![e, e], pow(c, r) / (factorial(r) * pochhammer(b, r)));
        r += 1;
    }
    s.with_order(order)
}

/// The two identities behind the self-duality of `₀F₁(−; α; cvz)`, as
/// series through degree `< order`:
/// `∂_z F(α) = (cv/α) F(α+1)` and `F(α+1) = F(α) − cvz/(α(α+1)) F(α+2)`.
pub fn check_f01_identities(alpha: &Rational, c: &Rational, order: u32) -> Result<(bool, bool), VerifyError> {
    if !alpha.is_positive() {
        return Err(DualityError::InvalidParameter(format!("alpha must be positive, got {alpha}")).into());
    }
    let one = Rational::one();
    let fa = f01(alpha, c, order + 2);
    let fa1 = f01(&(alpha + &one), c, order + 2);
    let fa2 = f01(&(alpha + &one + &one), c, order + 2);
    let lhs = fa.deriv(1).with_order(order);
    let rhs = fa1.mul_var(0).scale(&(c / alpha)).with_order(order);
    let derivative = (lhs - rhs).is_zero();
    let k = c / (alpha * (alpha + &one));
    let rec = (fa1.clone() - fa.clone() + fa2.mul_var(0).mul_var(1).scale(&k)).with_order(order);
    Ok((derivative, rec.is_zero()))
}
