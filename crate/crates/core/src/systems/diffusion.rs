//! The operators `L^{σ,β}` on `ℕ^V` and `𝓛^{σ,β}` on polynomial data.

use num_traits::{Signed, Zero};

use super::SystemError;
use crate::kernel::RateKernel;
use crate::rational::{int, usize_r, Rational};
use crate::series::TruncatedSeries;

/// Parameters `(σ, β)` of the pair of operators
/// `L^{σ,β}_{x,y} f(η) = η_x(β+ση_y)(f(η^{x,y})−f(η)) + η_y(β+ση_x)(f(η^{y,x})−f(η))`
/// and
/// `𝓛^{σ,β}_{x,y} = −β(z_x−z_y)(∂_x−∂_y) + σ z_x z_y (∂_x−∂_y)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSystem {
    pub sigma: Rational,
    pub beta: Rational,
}

impl DiffusionSystem {
    pub fn new(sigma: Rational, beta: Rational) -> Result<Self, SystemError> {
        if !beta.is_positive() {
            return Err(SystemError::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { sigma, beta })
    }

    /// First-order limit of independent walkers.
    pub fn irw_limit() -> Self {
        Self { sigma: int(0), beta: int(1) }
    }

    /// Brownian energy process BEP(α).
    pub fn bep(alpha: Rational) -> Result<Self, SystemError> {
        Self::new(int(1), alpha)
    }

    /// Limit operator of the extended exclusion process.
    pub fn sep_limit(gamma: Rational) -> Result<Self, SystemError> {
        Self::new(int(-1), gamma)
    }

    /// `Σ_{x<y} q(x,y) 𝓛_{x,y} f` with site `s` acting on variable `vars[s]`.
    ///
    /// Every term preserves total degree, so a series with guaranteed order
    /// `K` maps to one with guaranteed order `K`.
    pub fn apply_on(
        &self,
        kernel: &RateKernel,
        f: &TruncatedSeries,
        vars: &[usize],
    ) -> Result<TruncatedSeries, SystemError> {
        if vars.len() != kernel.len() {
            return Err(SystemError::SizeMismatch { expected: kernel.len(), got: vars.len() });
        }
        if f.order() == Some(0) {
            return Err(SystemError::InvalidParameter("series holds no guaranteed coefficients".into()));
        }
        let mut out = TruncatedSeries::zero(f.nvars());
        if let Some(o) = f.order() {
            out = out.with_order(o);
        }
        for e in kernel.edges() {
            let (i, j) = (vars[e.x], vars[e.y]);
            let grad = f.deriv(i) - f.deriv(j);
            let drift = (grad.mul_var(i) - grad.mul_var(j)).scale(&-&self.beta);
            let mut term = drift;
            if !self.sigma.is_zero() {
                let second = grad.deriv(i) - grad.deriv(j);
                term = term + second.mul_var(i).mul_var(j).scale(&self.sigma);
            }
            out = out + term.scale(&e.q);
        }
        Ok(out)
    }

    pub fn apply(&self, kernel: &RateKernel, f: &TruncatedSeries) -> Result<TruncatedSeries, SystemError> {
        let vars: Vec<usize> = (0..kernel.len()).collect();
        self.apply_on(kernel, f, &vars)
    }

    /// `L^{σ,β} f(η)` on `ℕ^V` without any occupancy cap; rates
    /// `η_x(β+ση_y)` may be negative.
    pub fn lattice_generator<F>(
        &self,
        kernel: &RateKernel,
        mut f: F,
        eta: &[usize],
    ) -> Result<Rational, SystemError>
    where
        F: FnMut(&[usize]) -> Option<Rational>,
    {
        if eta.len() != kernel.len() {
            return Err(SystemError::SizeMismatch { expected: kernel.len(), got: eta.len() });
        }
        let f0 = f(eta).ok_or_else(|| SystemError::Undefined(eta.to_vec()))?;
        let mut acc = Rational::zero();
        let mut buf = eta.to_vec();
        for e in kernel.edges() {
            for (a, b) in [(e.x, e.y), (e.y, e.x)] {
                if eta[a] == 0 {
                    continue;
                }
                let r = usize_r(eta[a]) * (&self.beta + &self.sigma * usize_r(eta[b]));
                if r.is_zero() {
                    continue;
                }
                buf[a] -= 1;
                buf[b] += 1;
                let f1 = f(&buf).ok_or_else(|| SystemError::Undefined(buf.clone()))?;
                buf[a] += 1;
                buf[b] -= 1;
                acc += &e.q * r * (f1 - &f0);
            }
        }
        Ok(acc)
    }
}
