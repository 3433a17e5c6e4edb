//! Stationary product marginals `ν_λ(n) = φ(n) λ^n / (n! Z_λ)`.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::kernel::RateKernel;
use crate::rational::{
    certified_sum, default_rel_tol, exp_bracket, factorial, finite_sum, pow, to_f64, usize_r, Bracket,
    Rational, SumError,
};
use crate::systems::{ParticleSystem, SystemError, SystemKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("inadmissible lambda: {0}")]
    Inadmissible(String),
    #[error("n = {0} lies outside the state space")]
    OutsideStateSpace(usize),
    #[error("infeasible move: {0}")]
    InfeasibleMove(String),
    #[error("no certified tail bound available: {0}")]
    NotSummable(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Sum(#[from] SumError),
}

/// The one-parameter family of reversible product marginals of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalFamily {
    sys: ParticleSystem,
}

impl MarginalFamily {
    pub fn new(sys: &ParticleSystem) -> Self {
        Self { sys: sys.clone() }
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.sys
    }

    /// `φ(n) = n! Π_{m=1}^n v(m−1)/u(m)`.
    pub fn phi(&self, n: usize) -> Result<Rational, MeasureError> {
        if !self.sys.in_state_space(n) {
            return Err(MeasureError::OutsideStateSpace(n));
        }
        let mut acc = Rational::one();
        for m in 1..=n {
            let v = self.sys.v(m - 1).ok_or(SystemError::RateUndefined(m - 1))?;
            let u = self.sys.u(m).ok_or(SystemError::RateUndefined(m))?;
            acc = acc * usize_r(m) * v / u;
        }
        Ok(acc)
    }

    pub fn check_lambda(&self, lambda: &Rational) -> Result<(), MeasureError> {
        if !lambda.is_positive() {
            return Err(MeasureError::Inadmissible(format!("{lambda} must be > 0")));
        }
        if self.sys.cap().is_none() {
            if let Some((sigma, _)) = self.sys.sigma_beta_params() {
                if sigma.is_positive() && lambda * &sigma >= Rational::one() {
                    return Err(MeasureError::Inadmissible(format!(
                        "{lambda} must be below 1/sigma = {}",
                        sigma.recip()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Unnormalized weight `φ(n) λ^n / n!`; zero outside the state space.
    pub fn weight(&self, lambda: &Rational, n: usize) -> Result<Rational, MeasureError> {
        if !self.sys.in_state_space(n) {
            return Ok(Rational::zero());
        }
        Ok(self.phi(n)? * pow(lambda, n) / factorial(n))
    }

    fn weights(&self, lambda: &Rational, upto: usize) -> Result<Vec<Rational>, MeasureError> {
        let mut w = vec![Rational::one()];
        for n in 1..=upto {
            if !self.sys.in_state_space(n) {
                w.push(Rational::zero());
                continue;
            }
            let v = self.sys.v(n - 1).ok_or(SystemError::RateUndefined(n - 1))?;
            let u = self.sys.u(n).ok_or(SystemError::RateUndefined(n))?;
            let next = &w[n - 1] * lambda * v / u;
            w.push(next);
        }
        Ok(w)
    }

    /// Bound on `sup_{m≥N} w(m+1)/w(m)`.
    fn weight_ratio_bound(&self, lambda: &Rational, n: usize) -> Result<Rational, MeasureError> {
        let (sigma, beta) = self
            .sys
            .sigma_beta_params()
            .ok_or_else(|| MeasureError::NotSummable("uncapped system without affine rates".into()))?;
        let at_n = (&beta + &sigma * usize_r(n)) / usize_r(n + 1);
        let sup = if sigma > at_n { sigma } else { at_n };
        Ok(lambda * sup)
    }

    /// Certified `Σ_n g(n) w(n)` for `|g(n)| ≤ c (n+1)^deg`.
    pub fn weighted_sum(
        &self,
        lambda: &Rational,
        g: impl Fn(usize) -> Rational,
        deg: usize,
        c: &Rational,
    ) -> Result<Bracket, MeasureError> {
        self.check_lambda(lambda)?;
        if let Some(cap) = self.sys.cap() {
            let w = self.weights(lambda, cap)?;
            return Ok(Bracket::exact(finite_sum(0..=cap, |n| g(n) * &w[n])));
        }
        // Fail early rather than inside the summation loop.
        self.weight_ratio_bound(lambda, 0)?;
        let cache = std::cell::RefCell::new(self.weights(lambda, 64)?);
        let w = |n: usize| -> Rational {
            let mut c = cache.borrow_mut();
            while c.len() <= n {
                let m = c.len();
                let v = self.sys.v(m - 1).expect("affine rates");
                let next = &c[m - 1] * lambda * v / usize_r(m);
                c.push(next);
            }
            c[n].clone()
        };
        let majorant = |n: usize| c * pow(&usize_r(n + 1), deg) * w(n);
        let ratio = |n: usize| {
            let growth = pow(&(usize_r(n + 2) / usize_r(n + 1)), deg);
            self.weight_ratio_bound(lambda, n).ok().map(|r| r * growth)
        };
        Ok(certified_sum(|n| g(n) * w(n), majorant, ratio, &default_rel_tol())?)
    }

    /// `Z_λ`, from a closed form when the system is a preset.
    pub fn partition(&self, lambda: &Rational) -> Result<Bracket, MeasureError> {
        self.check_lambda(lambda)?;
        if let Some(z) = self.partition_closed_form(lambda) {
            return Ok(z);
        }
        self.partition_series(lambda)
    }

    /// `Z_λ` by certified summation of the defining series.
    pub fn partition_series(&self, lambda: &Rational) -> Result<Bracket, MeasureError> {
        self.weighted_sum(lambda, |_| Rational::one(), 0, &Rational::one())
    }

    fn partition_closed_form(&self, lambda: &Rational) -> Option<Bracket> {
        if matches!(self.sys.kind(), SystemKind::Custom) {
            return None;
        }
        let (sigma, beta) = self.sys.sigma_beta_params()?;
        if sigma.is_zero() {
            return Some(exp_bracket(&(&beta * lambda)));
        }
        // (1 − σλ)^{−β/σ}, exact when the exponent is an integer.
        let expo = -(&beta / &sigma);
        if !expo.is_integer() {
            return None;
        }
        let base = Rational::one() - &sigma * lambda;
        let e: i32 = expo.to_integer().try_into().ok()?;
        Some(Bracket::exact(base.pow(e)))
    }

    pub fn nu(&self, lambda: &Rational, n: usize) -> Result<Bracket, MeasureError> {
        if !self.sys.in_state_space(n) {
            return Err(MeasureError::OutsideStateSpace(n));
        }
        let z = self.partition(lambda)?;
        let w = self.weight(lambda, n)?;
        Ok(z.recip().expect("Z > 0").scale(&w))
    }

    /// `θ(λ) = Σ_n (a + b n) ν_λ(n)`; closed form `a + bβλ/(1−σλ)` for
    /// `(σ,β)` systems.
    pub fn theta(&self, a: &Rational, b: &Rational, lambda: &Rational) -> Result<Bracket, MeasureError> {
        self.check_lambda(lambda)?;
        if let Some((sigma, beta)) = self.sys.sigma_beta_params() {
            let mean = &beta * lambda / (Rational::one() - &sigma * lambda);
            return Ok(Bracket::exact(a + b * mean));
        }
        let z = self.partition_series(lambda)?;
        let m = self.weighted_sum(lambda, usize_r, 1, &Rational::one())?;
        let mean = m.div(&z).expect("Z > 0");
        Ok(mean.scale(b).add(&Bracket::exact(a.clone())))
    }

    /// `∫ g dν_λ` as a ratio of certified sums.
    pub fn expectation(
        &self,
        lambda: &Rational,
        g: impl Fn(usize) -> Rational,
        deg: usize,
        c: &Rational,
    ) -> Result<Bracket, MeasureError> {
        let num = self.weighted_sum(lambda, g, deg, c)?;
        let z = self.partition(lambda)?;
        Ok(num.div(&z).expect("Z > 0"))
    }

    pub fn nu_f64(&self, lambda: &Rational, n: usize) -> Result<f64, MeasureError> {
        Ok(self.nu(lambda, n)?.midpoint_f64())
    }

    /// Inverse-CDF sample from `ν_λ`.
    pub fn sample<R: Rng + ?Sized>(&self, lambda: &Rational, rng: &mut R) -> Result<usize, MeasureError> {
        let z = self.partition(lambda)?.midpoint_f64();
        let lam = to_f64(lambda);
        let mut p = 1.0 / z;
        let target: f64 = rng.random();
        let mut cdf = p;
        let mut n = 0usize;
        while cdf <= target {
            if self.sys.cap().is_some_and(|c| n >= c) {
                return Ok(n);
            }
            let v = to_f64(&self.sys.v(n).ok_or(SystemError::RateUndefined(n))?);
            let u = to_f64(&self.sys.u(n + 1).ok_or(SystemError::RateUndefined(n + 1))?);
            p *= lam * v / u;
            n += 1;
            cdf += p;
            if p < f64::EPSILON * 1e-6 && n > 10 {
                // Remaining mass is below double resolution.
                return Ok(n);
            }
        }
        Ok(n)
    }
}

/// Product weight `Π_x w(η_x)`, the unnormalized `μ_λ(η)`.
pub fn product_weight(
    fam: &MarginalFamily,
    lambda: &Rational,
    eta: &[usize],
) -> Result<Rational, MeasureError> {
    let mut acc = Rational::one();
    for &n in eta {
        acc *= fam.weight(lambda, n)?;
    }
    Ok(acc)
}

/// `μ(η) q u(η_x) v(η_y) − μ(η^{x,y}) q u(η_y+1) v(η_x−1)` with `q` the
/// symmetrized edge rate; zero iff detailed balance holds for the move.
pub fn check_detailed_balance(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    lambda: &Rational,
    eta: &[usize],
    x: usize,
    y: usize,
) -> Result<Rational, MeasureError> {
    check_detailed_balance_with(&MarginalFamily::new(sys), sys, kernel, lambda, eta, x, y)
}

/// Same as [`check_detailed_balance`] with the measure taken from `fam`,
/// which may belong to a different system.
pub fn check_detailed_balance_with(
    fam: &MarginalFamily,
    sys: &ParticleSystem,
    kernel: &RateKernel,
    lambda: &Rational,
    eta: &[usize],
    x: usize,
    y: usize,
) -> Result<Rational, MeasureError> {
    if x == y || x >= kernel.len() || y >= kernel.len() {
        return Err(MeasureError::InfeasibleMove(format!("({x}, {y})")));
    }
    fam.check_lambda(lambda)?;
    sys.check_configuration(kernel, eta)?;
    let q = kernel.rate(x, y) + kernel.rate(y, x);
    let forward = sys.move_rate(eta[x], eta[y])?;
    if forward.is_zero() {
        return Ok(Rational::zero());
    }
    let mut after = eta.to_vec();
    after[x] -= 1;
    after[y] += 1;
    let backward = sys.move_rate(after[y], after[x])?;
    let lhs = product_weight(fam, lambda, eta)? * &q * forward;
    let rhs = product_weight(fam, lambda, &after)? * &q * backward;
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::systems::{enumerate_configurations, RateFn};

    #[test]
    fn phi_values() {
        assert_eq!(MarginalFamily::new(&ParticleSystem::irw()).phi(3).unwrap(), int(1));
        let a = ratio(3, 2);
        let sip = MarginalFamily::new(&ParticleSystem::sip(a.clone()).unwrap());
        assert_eq!(sip.phi(2).unwrap(), &a * (&a + int(1)));
        assert_eq!(sip.phi(0).unwrap(), int(1));
        let sep = MarginalFamily::new(&ParticleSystem::sep(2).unwrap());
        assert!(sep.phi(3).is_err());
    }

    #[test]
    fn partition_closed_forms() {
        let irw = MarginalFamily::new(&ParticleSystem::irw());
        assert!(irw.partition(&int(1)).unwrap().contains_f64(std::f64::consts::E));
        let sep = MarginalFamily::new(&ParticleSystem::sep(3).unwrap());
        assert_eq!(sep.partition(&ratio(1, 2)).unwrap(), Bracket::exact(ratio(27, 8)));
        let sip = MarginalFamily::new(&ParticleSystem::sip(int(2)).unwrap());
        assert_eq!(sip.partition(&ratio(1, 2)).unwrap(), Bracket::exact(int(4)));
        assert!(sip.partition(&int(1)).is_err());
    }

    #[test]
    fn series_partition_contains_closed_form() {
        let cases = [
            (ParticleSystem::irw(), ratio(3, 2)),
            (ParticleSystem::sip(ratio(1, 2)).unwrap(), ratio(1, 2)),
            (ParticleSystem::sip(int(2)).unwrap(), ratio(1, 4)),
            (ParticleSystem::sep(2).unwrap(), int(1)),
        ];
        for (sys, lam) in cases {
            let fam = MarginalFamily::new(&sys);
            let s = fam.partition_series(&lam).unwrap();
            let closed = match sys.sigma_beta_params().unwrap() {
                (s, b) if s.is_zero() => (to_f64(&b) * to_f64(&lam)).exp(),
                (s, b) => (1.0 - to_f64(&s) * to_f64(&lam)).powf(-to_f64(&b) / to_f64(&s)),
            };
            assert!(s.contains_f64(closed), "{}: {s} vs {closed}", sys.name());
            assert!(to_f64(&s.width()) < 1e-11 * closed);
        }
    }

    #[test]
    fn marginal_values() {
        let irw = MarginalFamily::new(&ParticleSystem::irw());
        assert!(irw.nu(&int(1), 0).unwrap().contains_f64((-1.0f64).exp()));
        let sep = MarginalFamily::new(&ParticleSystem::sep(1).unwrap());
        assert_eq!(sep.nu(&int(1), 1).unwrap(), Bracket::exact(ratio(1, 2)));
        let total = (0..=1).fold(Bracket::exact(int(0)), |acc, n| acc.add(&sep.nu(&int(1), n).unwrap()));
        assert_eq!(total, Bracket::exact(int(1)));
    }

    #[test]
    fn theta_closed_forms() {
        let lam = ratio(1, 3);
        let irw = MarginalFamily::new(&ParticleSystem::irw());
        assert_eq!(irw.theta(&int(0), &int(1), &lam).unwrap(), Bracket::exact(lam.clone()));
        let a = int(2);
        let sip = MarginalFamily::new(&ParticleSystem::sip(a.clone()).unwrap());
        assert_eq!(sip.theta(&int(0), &a.recip(), &lam).unwrap(), Bracket::exact(&lam / (int(1) - &lam)));
        let sep = MarginalFamily::new(&ParticleSystem::sep(3).unwrap());
        assert_eq!(sep.theta(&int(0), &ratio(1, 3), &lam).unwrap(), Bracket::exact(&lam / (int(1) + &lam)));
    }

    #[test]
    fn theta_of_custom_system_matches_series() {
        // A capped custom system with an affine-looking table (SEP(2)).
        let custom =
            ParticleSystem::custom(RateFn::identity(), RateFn::Table(vec![int(2), int(1), int(0)]), Some(2))
                .unwrap();
        let fam = MarginalFamily::new(&custom);
        let lam = ratio(1, 2);
        let t = fam.theta(&int(1), &int(1), &lam).unwrap();
        // Binomial(2, 1/3) mean 2/3.
        assert_eq!(t, Bracket::exact(ratio(5, 3)));
    }

    #[test]
    fn detailed_balance_holds_for_presets() {
        let k = RateKernel::path(3).unwrap();
        let systems = [
            ParticleSystem::irw(),
            ParticleSystem::sip(ratio(1, 2)).unwrap(),
            ParticleSystem::sep(2).unwrap(),
        ];
        for sys in &systems {
            for eta in enumerate_configurations(3, sys.cap().unwrap_or(3), None) {
                for (x, y) in [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2)] {
                    let r = check_detailed_balance(sys, &k, &ratio(1, 3), &eta, x, y).unwrap();
                    assert!(r.is_zero());
                }
            }
        }
        assert!(check_detailed_balance(&systems[0], &k, &int(1), &[1, 0, 0], 1, 1).is_err());
    }

    #[test]
    fn wrong_measure_breaks_balance() {
        let k = RateKernel::path(2).unwrap();
        let sys = ParticleSystem::sip(int(1)).unwrap();
        let wrong = MarginalFamily::new(&ParticleSystem::sip(int(2)).unwrap());
        let r = check_detailed_balance_with(&wrong, &sys, &k, &ratio(1, 2), &[3, 1], 0, 1).unwrap();
        assert!(!r.is_zero());
    }

    #[test]
    fn sampler_matches_mean() {
        use rand::SeedableRng;
        let fam = MarginalFamily::new(&ParticleSystem::sip(int(1)).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| fam.sample(&ratio(1, 2), &mut rng).unwrap() as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // Geometric on ℕ with ratio 1/2: mean 1, variance 2.
        assert!((mean - 1.0).abs() < 3.0 * (var / n as f64).sqrt());
    }
}
