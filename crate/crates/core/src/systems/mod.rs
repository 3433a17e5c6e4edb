//! Particle systems with rates `u(η_x) v(η_y)` and their generators.

mod bep;
mod diffusion;
mod gillespie;

pub use bep::{diffusion_path, simulate_bep, EnergyConfiguration, MAX_HALVINGS};
pub use diffusion::DiffusionSystem;
pub use gillespie::{gillespie_path, gillespie_simulate, RateTable, Trajectory};

use std::ops::Deref;

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::kernel::RateKernel;
use crate::rational::{usize_r, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rate functions violate the standing assumptions: {0}")]
    InvalidRates(String),
    #[error("rate function has no value at n = {0}")]
    RateUndefined(usize),
    #[error("configuration has {got} sites, kernel has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("occupation {value} at site {site} exceeds the cap {cap}")]
    OutsideStateSpace { site: usize, value: usize, cap: usize },
    #[error("function undefined at configuration {0:?}")]
    Undefined(Vec<usize>),
    #[error("invalid time or step: {0}")]
    InvalidTime(String),
    #[error("positivity retry cap exceeded after {0} halvings")]
    StepHalvingExceeded(u32),
}

/// A single rate function `ℕ -> ℚ`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFn {
    /// `c0 + c1 n`.
    Affine { c0: Rational, c1: Rational },
    /// Explicit values on `0..len`; undefined beyond.
    Table(Vec<Rational>),
}

impl RateFn {
    pub fn identity() -> Self {
        RateFn::Affine { c0: Rational::zero(), c1: Rational::one() }
    }

    pub fn eval(&self, n: usize) -> Option<Rational> {
        match self {
            RateFn::Affine { c0, c1 } => Some(c0 + c1 * usize_r(n)),
            RateFn::Table(t) => t.get(n).cloned(),
        }
    }

    fn defined_up_to(&self) -> Option<usize> {
        match self {
            RateFn::Affine { .. } => None,
            RateFn::Table(t) => Some(t.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    Irw,
    Sip { alpha: Rational },
    Sep { gamma: usize },
    SigmaBeta { sigma: Rational, beta: Rational },
    Custom,
}

/// Conservative particle system on `E = {0..cap}` or `ℕ`; a particle moves
/// from `x` to `y` at rate `p(x,y) u(η_x) v(η_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    kind: SystemKind,
    u: RateFn,
    v: RateFn,
    cap: Option<usize>,
}

impl ParticleSystem {
    pub fn irw() -> Self {
        Self {
            kind: SystemKind::Irw,
            u: RateFn::identity(),
            v: RateFn::Affine { c0: Rational::one(), c1: Rational::zero() },
            cap: None,
        }
    }

    pub fn sip(alpha: Rational) -> Result<Self, SystemError> {
        if !alpha.is_positive() {
            return Err(SystemError::InvalidParameter(format!("SIP needs alpha > 0, got {alpha}")));
        }
        Ok(Self {
            kind: SystemKind::Sip { alpha: alpha.clone() },
            u: RateFn::identity(),
            v: RateFn::Affine { c0: alpha, c1: Rational::one() },
            cap: None,
        })
    }

    pub fn sep(gamma: usize) -> Result<Self, SystemError> {
        if gamma == 0 {
            return Err(SystemError::InvalidParameter("SEP needs gamma >= 1".into()));
        }
        Ok(Self {
            kind: SystemKind::Sep { gamma },
            u: RateFn::identity(),
            v: RateFn::Affine { c0: usize_r(gamma), c1: -Rational::one() },
            cap: Some(gamma),
        })
    }

    /// `u(n) = n`, `v(n) = β + σ n`. For `σ < 0` the ratio `β/|σ|` must be a
    /// positive integer, which becomes the occupancy cap.
    pub fn sigma_beta(sigma: Rational, beta: Rational) -> Result<Self, SystemError> {
        if !beta.is_positive() {
            return Err(SystemError::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let cap = if sigma.is_negative() {
            let c = &beta / -&sigma;
            if !c.is_integer() {
                return Err(SystemError::InvalidParameter(format!(
                    "beta/|sigma| = {c} must be an integer when sigma < 0"
                )));
            }
            Some(
                c.to_integer()
                    .to_usize()
                    .ok_or_else(|| SystemError::InvalidParameter("cap too large".into()))?,
            )
        } else {
            None
        };
        Ok(Self {
            kind: SystemKind::SigmaBeta { sigma: sigma.clone(), beta: beta.clone() },
            u: RateFn::identity(),
            v: RateFn::Affine { c0: beta, c1: sigma },
            cap,
        })
    }

    /// Custom rates. Checked on every index where both functions are
    /// defined: `u(0)=0`, `u(1)=1`, `u(n)>0` for `n>0`; `v(0)≠0`, `v(n)>0`
    /// below the cap and `v(cap)=0`.
    pub fn custom(u: RateFn, v: RateFn, cap: Option<usize>) -> Result<Self, SystemError> {
        let sys = Self { kind: SystemKind::Custom, u, v, cap };
        sys.check_rates()?;
        Ok(sys)
    }

    fn check_rates(&self) -> Result<(), SystemError> {
        let limit = match (self.cap, self.u.defined_up_to(), self.v.defined_up_to()) {
            (Some(c), _, _) => c + 1,
            (None, a, b) => a.into_iter().chain(b).min().unwrap_or(8),
        };
        let bad = |m: String| Err(SystemError::InvalidRates(m));
        if self.u.eval(0).is_none_or(|x| !x.is_zero()) {
            return bad("u(0) must be 0".into());
        }
        if limit > 1 && self.u.eval(1).is_none_or(|x| !x.is_one()) {
            return bad("u(1) must be 1".into());
        }
        for n in 1..limit {
            if self.u.eval(n).is_none_or(|x| !x.is_positive()) {
                return bad(format!("u({n}) must be positive"));
            }
        }
        for n in 0..limit {
            let Some(x) = self.v.eval(n) else { break };
            let at_cap = self.cap == Some(n);
            if at_cap && !x.is_zero() {
                return bad(format!("v({n}) must vanish at the cap"));
            }
            if !at_cap && !x.is_positive() {
                return bad(format!("v({n}) must be positive"));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn u(&self, n: usize) -> Option<Rational> {
        self.u.eval(n)
    }

    pub fn v(&self, n: usize) -> Option<Rational> {
        if self.cap.is_some_and(|c| n > c) {
            return Some(Rational::zero());
        }
        self.v.eval(n)
    }

    pub fn rate_fns(&self) -> (&RateFn, &RateFn) {
        (&self.u, &self.v)
    }

    /// `(σ, β)` when the system is of the form `u(n)=n`, `v(n)=β+σn`.
    pub fn sigma_beta_params(&self) -> Option<(Rational, Rational)> {
        match &self.kind {
            SystemKind::Irw => Some((Rational::zero(), Rational::one())),
            SystemKind::Sip { alpha } => Some((Rational::one(), alpha.clone())),
            SystemKind::Sep { gamma } => Some((-Rational::one(), usize_r(*gamma))),
            SystemKind::SigmaBeta { sigma, beta } => Some((sigma.clone(), beta.clone())),
            SystemKind::Custom => match (&self.u, &self.v) {
                (RateFn::Affine { c0: u0, c1: u1 }, RateFn::Affine { c0, c1 })
                    if u0.is_zero() && u1.is_one() =>
                {
                    Some((c1.clone(), c0.clone()))
                }
                _ => None,
            },
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            SystemKind::Irw => "IRW".into(),
            SystemKind::Sip { alpha } => format!("SIP({alpha})"),
            SystemKind::Sep { gamma } => format!("SEP({gamma})"),
            SystemKind::SigmaBeta { sigma, beta } => format!("L(sigma={sigma}, beta={beta})"),
            SystemKind::Custom => "custom".into(),
        }
    }

    pub fn in_state_space(&self, n: usize) -> bool {
        self.cap.is_none_or(|c| n <= c)
    }

    pub fn check_configuration(&self, kernel: &RateKernel, eta: &[usize]) -> Result<(), SystemError> {
        if eta.len() != kernel.len() {
            return Err(SystemError::SizeMismatch { expected: kernel.len(), got: eta.len() });
        }
        if let Some(cap) = self.cap {
            if let Some((site, &value)) = eta.iter().enumerate().find(|(_, &n)| n > cap) {
                return Err(SystemError::OutsideStateSpace { site, value, cap });
            }
        }
        Ok(())
    }

    /// Rate of one particle moving from a site holding `from` to a site
    /// holding `to`, before the kernel factor.
    pub fn move_rate(&self, from: usize, to: usize) -> Result<Rational, SystemError> {
        let u = self.u(from).ok_or(SystemError::RateUndefined(from))?;
        if u.is_zero() {
            return Ok(u);
        }
        let v = self.v(to).ok_or(SystemError::RateUndefined(to))?;
        Ok(u * v)
    }
}

/// Occupation numbers, one per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(pub Vec<usize>);

impl Configuration {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `η^{x,y}`: one particle moved from `x` to `y`, if `η_x > 0`.
    pub fn moved(&self, x: usize, y: usize) -> Option<Configuration> {
        moved(&self.0, x, y).map(Configuration)
    }
}

impl Deref for Configuration {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Configuration {
    fn from(v: Vec<usize>) -> Self {
        Configuration(v)
    }
}

pub fn moved(eta: &[usize], x: usize, y: usize) -> Option<Vec<usize>> {
    if eta[x] == 0 {
        return None;
    }
    let mut m = eta.to_vec();
    m[x] -= 1;
    m[y] += 1;
    Some(m)
}

/// All configurations on `nsites` sites with entries `<= max_entry` and,
/// optionally, total `<= max_total`, in lexicographic order.
pub fn enumerate_configurations(
    nsites: usize,
    max_entry: usize,
    max_total: Option<usize>,
) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; nsites];
    fn rec(i: usize, left: usize, max_entry: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for n in 0..=max_entry.min(left) {
            cur[i] = n;
            rec(i + 1, left - n, max_entry, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, max_total.unwrap_or(usize::MAX), max_entry, &mut cur, &mut out);
    out
}

/// Configurations with total exactly `total`, entries `<= max_entry`.
pub fn sector(nsites: usize, total: usize, max_entry: usize) -> Vec<Vec<usize>> {
    enumerate_configurations(nsites, max_entry.min(total), Some(total))
        .into_iter()
        .filter(|c| c.iter().sum::<usize>() == total)
        .collect()
}

/// `L f(η) = Σ_{x<y} q(x,y) [u(η_x)v(η_y)(f(η^{x,y}) − f(η)) + u(η_y)v(η_x)(f(η^{y,x}) − f(η))]`.
///
/// `f` is only evaluated at `η` and at configurations reachable with a
/// positive rate.
pub fn apply_generator<F>(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    mut f: F,
    eta: &[usize],
) -> Result<Rational, SystemError>
where
    F: FnMut(&[usize]) -> Option<Rational>,
{
    sys.check_configuration(kernel, eta)?;
    let f0 = f(eta).ok_or_else(|| SystemError::Undefined(eta.to_vec()))?;
    let mut acc = Rational::zero();
    let mut buf = eta.to_vec();
    for e in kernel.edges() {
        for (a, b) in [(e.x, e.y), (e.y, e.x)] {
            let r = sys.move_rate(eta[a], eta[b])?;
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

/// The extended exclusion operator `L^N` evaluated at `η/N`, `η ∈ ℕ^V`,
/// with rates `η_x(γ − η_y)` that may be negative.
pub fn apply_extended_sep<F>(
    gamma: &Rational,
    scale: u64,
    kernel: &RateKernel,
    f: F,
    eta: &[usize],
) -> Result<Rational, SystemError>
where
    F: Fn(&[Rational]) -> Rational,
{
    if scale == 0 {
        return Err(SystemError::InvalidParameter("scale N must be >= 1".into()));
    }
    if eta.len() != kernel.len() {
        return Err(SystemError::SizeMismatch { expected: kernel.len(), got: eta.len() });
    }
    let n = Rational::from_integer(scale.into());
    let point = |c: &[usize]| -> Vec<Rational> { c.iter().map(|&m| usize_r(m) / &n).collect() };
    let f0 = f(&point(eta));
    let mut acc = Rational::zero();
    for e in kernel.edges() {
        for (a, b) in [(e.x, e.y), (e.y, e.x)] {
            if eta[a] == 0 {
                continue;
            }
            let r = usize_r(eta[a]) * (gamma - usize_r(eta[b]));
            if r.is_zero() {
                continue;
            }
            let m = moved(eta, a, b).expect("eta[a] > 0");
            acc += &e.q * r * (f(&point(&m)) - &f0);
        }
    }
    Ok(acc)
}

/// Total particle number as a configuration function.
pub fn total_particles(eta: &[usize]) -> Option<Rational> {
    Some(usize_r(eta.iter().sum()))
}

#[cfg(test)]
fn one_fn(_: &[usize]) -> Option<Rational> {
    Some(crate::rational::int(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn presets() -> Vec<ParticleSystem> {
        vec![
            ParticleSystem::irw(),
            ParticleSystem::sip(ratio(1, 2)).unwrap(),
            ParticleSystem::sip(int(2)).unwrap(),
            ParticleSystem::sep(1).unwrap(),
            ParticleSystem::sep(3).unwrap(),
        ]
    }

    #[test]
    fn sip_single_particle_leaves_site() {
        // One edge with p(1,2)=p(2,1)=1/2, i.e. total rate 1.
        let mut k = RateKernel::with_sites(2);
        k.set_rate(0, 1, ratio(1, 2)).unwrap();
        k.set_rate(1, 0, ratio(1, 2)).unwrap();
        let sys = ParticleSystem::sip(int(1)).unwrap();
        let r = apply_generator(&sys, &k, |e| Some(usize_r(e[0])), &[1, 0]).unwrap();
        assert_eq!(r, int(-1));
        let p = RateKernel::path(2).unwrap();
        let r = apply_generator(&sys, &p, |e| Some(usize_r(e[0])), &[1, 0]).unwrap();
        assert_eq!(r, int(-2));
    }

    #[test]
    fn sep_rejects_overfull_configuration() {
        let sys = ParticleSystem::sep(1).unwrap();
        let k = RateKernel::path(2).unwrap();
        assert!(matches!(
            apply_generator(&sys, &k, one_fn, &[2, 0]),
            Err(SystemError::OutsideStateSpace { .. })
        ));
    }

    #[test]
    fn undefined_function_is_reported() {
        let sys = ParticleSystem::irw();
        let k = RateKernel::path(2).unwrap();
        let r = apply_generator(&sys, &k, |e| (e[0] < 2).then(|| int(1)), &[1, 1]);
        assert_eq!(r, Err(SystemError::Undefined(vec![2, 0])));
    }

    #[test]
    fn zero_rate_moves_never_evaluate() {
        // SEP(1) full lattice: f is undefined everywhere except at η.
        let sys = ParticleSystem::sep(1).unwrap();
        let k = RateKernel::path(3).unwrap();
        let r = apply_generator(&sys, &k, |e| (e == [1, 1, 1]).then(|| int(5)), &[1, 1, 1]);
        assert_eq!(r, Ok(int(0)));
    }

    #[test]
    fn custom_rates_are_validated() {
        let bad = ParticleSystem::custom(
            RateFn::Table(vec![int(0), int(2), int(3)]),
            RateFn::Table(vec![int(1), int(1), int(1)]),
            None,
        );
        assert!(bad.is_err());
        let capped = ParticleSystem::custom(RateFn::identity(), RateFn::Table(vec![int(1), int(0)]), Some(1));
        assert!(capped.is_ok());
        assert!(ParticleSystem::sigma_beta(int(-1), ratio(3, 2)).is_err());
        assert_eq!(ParticleSystem::sigma_beta(int(-2), int(4)).unwrap().cap(), Some(2));
    }

    #[test]
    fn extended_sep_with_unit_scale_matches_generator() {
        let sys = ParticleSystem::sep(2).unwrap();
        let k = RateKernel::path(3).unwrap();
        let f_int = |e: &[usize]| Some(usize_r(e[0] * e[0] + 3 * e[1] * e[2]));
        let f_rat = |z: &[Rational]| &z[0] * &z[0] + int(3) * &z[1] * &z[2];
        for eta in enumerate_configurations(3, 2, None) {
            let a = apply_generator(&sys, &k, f_int, &eta).unwrap();
            let b = apply_extended_sep(&int(2), 1, &k, f_rat, &eta).unwrap();
            assert_eq!(a, b, "eta = {eta:?}");
        }
    }

    #[test]
    fn sector_enumeration() {
        assert_eq!(sector(2, 2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(enumerate_configurations(2, 1, None).len(), 4);
    }

    proptest! {
        #[test]
        fn constants_and_totals_are_harmonic(
            which in 0usize..5, n in 2usize..5, eta in proptest::collection::vec(0usize..4, 4)
        ) {
            let sys = &presets()[which];
            let k = RateKernel::cycle(n).unwrap();
            let mut eta = eta[..n].to_vec();
            if let Some(c) = sys.cap() {
                for e in eta.iter_mut() { *e = (*e).min(c); }
            }
            prop_assert_eq!(apply_generator(sys, &k, one_fn, &eta).unwrap(), int(0));
            prop_assert_eq!(apply_generator(sys, &k, total_particles, &eta).unwrap(), int(0));
        }
    }
}
