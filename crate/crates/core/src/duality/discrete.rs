//! Discrete single-site functions `d(k, n)`.

use num_traits::{One, Signed, Zero};

use super::{check_range, sigma_beta, DualityError, SigmaBeta};
use crate::measures::MarginalFamily;
use crate::rational::{binomial, factorial, falling, format_rational, pow, Bracket, Rational};
use crate::systems::ParticleSystem;

pub(super) fn phi_sb(p: &SigmaBeta, r: usize) -> Rational {
    // φ(r) = Π_{j<r} (β + σ j)
    let mut acc = Rational::one();
    for j in 0..r {
        acc *= &p.beta + &p.sigma * Rational::from_integer(j.into());
    }
    acc
}

/// `n!/(n−k)! / φ(k) · 1{k ≤ n}`. For IRW this is `n!/(n−k)!`, for
/// SIP(α) `n!/(n−k)! Γ(α)/Γ(α+k)`, for SEP(γ) `n!/(n−k)! (γ−k)!/γ!`.
pub fn classical_d(sys: &ParticleSystem, k: usize, n: usize) -> Result<Rational, DualityError> {
    let p = sigma_beta(sys)?;
    check_range(sys, k, n)?;
    if k > n {
        return Ok(Rational::zero());
    }
    Ok(falling(n, k) / phi_sb(&p, k))
}

/// Terminating sum `Σ_{r ≤ min(k,n)} C(n,r) C(k,r) r! a^{k−r} (bβ)^r / φ(r)`.
///
/// This is `a^k ₂F₀`/`₂F₁`-type in normalized form and needs no sign
/// constraint on `a, b`.
pub fn hypergeometric_d(
    sys: &ParticleSystem,
    a: &Rational,
    b: &Rational,
    k: usize,
    n: usize,
) -> Result<Rational, DualityError> {
    check_range(sys, k, n)?;
    let p = sigma_beta(sys)?;
    Ok(hypergeometric_sum(&p, a, b, k, n))
}

/// The same sum without the state-space check, and with `r` additionally
/// truncated at the cap; used to extend capped families to all `k` when
/// forming generating functions.
pub(crate) fn hypergeometric_extended(
    sys: &ParticleSystem,
    a: &Rational,
    b: &Rational,
    k: usize,
    n: usize,
) -> Result<Rational, DualityError> {
    let p = sigma_beta(sys)?;
    Ok(hypergeometric_sum(&p, a, b, k, n))
}

fn hypergeometric_sum(p: &SigmaBeta, a: &Rational, b: &Rational, k: usize, n: usize) -> Rational {
    let bb = b * &p.beta;
    let mut rmax = k.min(n);
    if let Some(c) = p.cap {
        rmax = rmax.min(c);
    }
    let mut acc = Rational::zero();
    let mut phi = Rational::one();
    for r in 0..=rmax {
        if r > 0 {
            phi *= &p.beta + &p.sigma * Rational::from_integer((r - 1).into());
        }
        let ar = pow(a, k - r);
        if ar.is_zero() {
            continue;
        }
        acc += binomial(n, r) * binomial(k, r) * factorial(r) * ar * pow(&bb, r) / &phi;
    }
    acc
}

/// `C_k` with `|d(k, n)| ≤ C_k (n+1)^k` for the terminating sum with
/// parameters `(a, b)`.
pub fn growth_constant(
    sys: &ParticleSystem,
    a: &Rational,
    b: &Rational,
    k: usize,
) -> Result<Rational, DualityError> {
    let p = sigma_beta(sys)?;
    let bb = (b * &p.beta).abs();
    let mut rmax = k;
    if let Some(c) = p.cap {
        rmax = rmax.min(c);
    }
    Ok((0..=rmax).map(|r| binomial(k, r) * pow(&a.abs(), k - r) * pow(&bb, r) / phi_sb(&p, r).abs()).sum())
}

/// Three-term recurrence in `k` of the matching orthogonal family
/// (Charlier for σ = 0, Meixner for σ > 0, Krawtchouk for σ < 0), applied
/// to `F_k(n) = d(k,n)/a^k`. Needs `a ≠ 0`.
pub fn recurrence_d(
    sys: &ParticleSystem,
    a: &Rational,
    b: &Rational,
    k: usize,
    n: usize,
) -> Result<Rational, DualityError> {
    check_range(sys, k, n)?;
    if a.is_zero() {
        return Err(DualityError::InvalidParameter("recurrence route needs a != 0".into()));
    }
    let p = sigma_beta(sys)?;
    let x = Rational::from_integer(n.into());
    let one = Rational::one();
    let mut prev = Rational::zero();
    let mut cur = one.clone();
    if p.sigma.is_zero() {
        // F_{j+1} = (w x + 1 − j w) F_j + j w F_{j−1},  w = b/a
        let w = b / a;
        for j in 0..k {
            let jr = Rational::from_integer(j.into());
            let next = (&w * &x + &one - &jr * &w) * &cur + &jr * &w * &prev;
            prev = std::mem::replace(&mut cur, next);
        }
    } else {
        // (j + c0) F_{j+1} = [w x + j(1−w) + j + c0] F_j − j(1−w) F_{j−1},
        // c0 = β/σ,  w = bβ/(σ a)
        let c0 = &p.beta / &p.sigma;
        let w = b * &p.beta / (&p.sigma * a);
        for j in 0..k {
            let jr = Rational::from_integer(j.into());
            let lead = &jr + &c0;
            if lead.is_zero() {
                return Err(DualityError::OutOfRange { k, n });
            }
            let omw = &one - &w;
            let next = ((&w * &x + &jr * &omw + &jr + &c0) * &cur - &jr * &omw * &prev) / lead;
            prev = std::mem::replace(&mut cur, next);
        }
    }
    Ok(pow(a, k) * cur)
}

/// Orthogonal family with `d(1, n) = a + b n`, evaluated by the terminating
/// sum and, for `a ≠ 0`, cross-checked against the three-term recurrence.
/// For `a = 0` only the sum applies; it reduces to the classical function
/// scaled by `(bβ)^k`.
pub fn orthogonal_d(
    sys: &ParticleSystem,
    a: &Rational,
    b: &Rational,
    k: usize,
    n: usize,
) -> Result<Rational, DualityError> {
    if b.is_zero() {
        return Err(DualityError::InvalidParameter("orthogonal family needs b != 0".into()));
    }
    let sum = hypergeometric_d(sys, a, b, k, n)?;
    if a.is_zero() {
        return Ok(sum);
    }
    let rec = recurrence_d(sys, a, b, k, n)?;
    if rec != sum {
        return Err(DualityError::RouteMismatch {
            k,
            n,
            sum: format_rational(&sum),
            recurrence: format_rational(&rec),
        });
    }
    Ok(sum)
}

/// `1{k=n} k! / (φ(k) λ^k)`: the cheap function without the constant `Z_λ`.
pub fn cheap_d_unnormalized(
    sys: &ParticleSystem,
    lambda: &Rational,
    k: usize,
    n: usize,
) -> Result<Rational, DualityError> {
    let fam = MarginalFamily::new(sys);
    fam.check_lambda(lambda)?;
    check_range(sys, k, n)?;
    if k != n {
        return Ok(Rational::zero());
    }
    Ok(factorial(k) / (fam.phi(k)? * pow(lambda, k)))
}

/// `1{k=n} / ν_λ(k) = 1{k=n} Z_λ k! / (φ(k) λ^k)`.
pub fn cheap_d(sys: &ParticleSystem, lambda: &Rational, k: usize, n: usize) -> Result<Bracket, DualityError> {
    let u = cheap_d_unnormalized(sys, lambda, k, n)?;
    if u.is_zero() {
        return Ok(Bracket::exact(u));
    }
    Ok(MarginalFamily::new(sys).partition(lambda)?.scale(&u))
}

pub fn trivial_d(a: &Rational, k: usize, _n: usize) -> Rational {
    pow(a, k)
}

/// Named polynomial family behind an orthogonal duality, with the
/// parameters of its usual normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum PolynomialFamily {
    /// Charlier `C_k(n; μ)`, Poisson(μ) weight, `μ = −a/b`.
    Charlier { mu: Rational },
    /// Meixner `M_k(n; β, c)`, weight `(β)_n c^n / n!`, `c = a/(a − bβ)`.
    Meixner { beta: Rational, c: Rational },
    /// Krawtchouk `K_k(n; p, N)`, Binomial(N, p) weight, `p = −a/(bN)`.
    Krawtchouk { p: Rational, n: usize },
}

impl PolynomialFamily {
    /// The `λ` for which `ν_λ` is the orthogonality weight, if the
    /// parameters lie in the range where the weight is a probability.
    pub fn weight_lambda(&self) -> Option<Rational> {
        let one = Rational::one();
        match self {
            PolynomialFamily::Charlier { mu } => mu.is_positive().then(|| mu.clone()),
            PolynomialFamily::Meixner { c, .. } => (c.is_positive() && *c < one).then(|| c.clone()),
            PolynomialFamily::Krawtchouk { p, .. } => (p.is_positive() && *p < one).then(|| p / (&one - p)),
        }
    }
}

/// Family matching `(a, b)` on a `(σ, β)` system with `σ ∈ {0, ±1}`.
pub fn matching_family(
    sys: &ParticleSystem,
    a: &Rational,
    b: &Rational,
) -> Result<PolynomialFamily, DualityError> {
    let p = sigma_beta(sys)?;
    if a.is_zero() || b.is_zero() {
        return Err(DualityError::InvalidParameter("named polynomial families need a, b != 0".into()));
    }
    if p.sigma.is_zero() {
        return Ok(PolynomialFamily::Charlier { mu: -(a / b) });
    }
    if p.sigma.is_positive() {
        return Ok(PolynomialFamily::Meixner {
            beta: &p.beta / &p.sigma,
            c: a / (a - b * &p.beta / &p.sigma),
        });
    }
    let n = p.cap.expect("negative sigma implies a cap");
    Ok(PolynomialFamily::Krawtchouk { p: -(a / (b * Rational::from_integer(n.into()))), n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio, to_f64};

    fn grid() -> Vec<ParticleSystem> {
        vec![
            ParticleSystem::irw(),
            ParticleSystem::sip(ratio(1, 2)).unwrap(),
            ParticleSystem::sip(int(2)).unwrap(),
            ParticleSystem::sep(1).unwrap(),
            ParticleSystem::sep(3).unwrap(),
        ]
    }

    #[test]
    fn classical_values() {
        let irw = ParticleSystem::irw();
        assert_eq!(classical_d(&irw, 2, 3).unwrap(), int(6));
        assert_eq!(classical_d(&irw, 0, 5).unwrap(), int(1));
        assert_eq!(classical_d(&irw, 4, 3).unwrap(), int(0));
        let sip = ParticleSystem::sip(int(2)).unwrap();
        // 3!/1! · Γ(2)/Γ(4) = 6/6
        assert_eq!(classical_d(&sip, 2, 3).unwrap(), int(1));
        let sep = ParticleSystem::sep(3).unwrap();
        // 3!/1! · 1!/3!
        assert_eq!(classical_d(&sep, 2, 3).unwrap(), int(1));
        assert!(classical_d(&sep, 4, 1).is_err());
    }

    #[test]
    fn orthogonal_small_values() {
        let irw = ParticleSystem::irw();
        assert_eq!(orthogonal_d(&irw, &int(1), &int(1), 1, 1).unwrap(), int(2));
        for sys in grid() {
            for n in 0..=sys.cap().unwrap_or(5) {
                assert_eq!(orthogonal_d(&sys, &int(2), &ratio(-1, 2), 0, n).unwrap(), int(1));
                let d1 = orthogonal_d(&sys, &int(2), &ratio(-1, 2), 1, n).unwrap();
                assert_eq!(d1, int(2) - ratio(1, 2) * Rational::from_integer(n.into()));
            }
        }
    }

    #[test]
    fn a_zero_is_scaled_classical() {
        let sip = ParticleSystem::sip(ratio(1, 2)).unwrap();
        for k in 0..5 {
            for n in 0..7 {
                let o = orthogonal_d(&sip, &int(0), &int(3), k, n).unwrap();
                let c = classical_d(&sip, k, n).unwrap() * pow(&ratio(3, 2), k);
                assert_eq!(o, c);
            }
        }
    }

    #[test]
    fn routes_agree_on_grid() {
        let params = [-2i64, -1, 1, 2];
        for sys in grid() {
            for &a in &params {
                for &b in &params {
                    let (a, b) = (ratio(a, 2), int(b));
                    for k in 0..=sys.cap().unwrap_or(10) {
                        for n in 0..=sys.cap().unwrap_or(10) {
                            orthogonal_d(&sys, &a, &b, k, n).unwrap();
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn self_dual_symmetry_at_a_one() {
        // With a = 1 the matrix d(k, n) is symmetric.
        for sys in grid() {
            let top = sys.cap().unwrap_or(6);
            for k in 0..=top {
                for n in 0..=top {
                    assert_eq!(
                        orthogonal_d(&sys, &int(1), &ratio(-1, 3), k, n).unwrap(),
                        orthogonal_d(&sys, &int(1), &ratio(-1, 3), n, k).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn cheap_values() {
        let irw = ParticleSystem::irw();
        assert_eq!(cheap_d(&irw, &int(1), 1, 2).unwrap(), Bracket::exact(int(0)));
        assert!(cheap_d(&irw, &int(1), 0, 0).unwrap().contains_f64(std::f64::consts::E));
        let sip = ParticleSystem::sip(int(1)).unwrap();
        // 1/ν_{1/2}(1) for the geometric law ν(n) = 2^{-n-1}
        assert_eq!(cheap_d(&sip, &ratio(1, 2), 1, 1).unwrap(), Bracket::exact(int(4)));
        assert!(cheap_d(&sip, &int(1), 1, 1).is_err());
    }

    #[test]
    fn trivial_values() {
        assert_eq!(trivial_d(&int(2), 3, 7), int(8));
        assert_eq!(trivial_d(&int(1), 9, 0), int(1));
        assert_eq!(trivial_d(&ratio(-5, 3), 0, 4), int(1));
    }

    fn orthogonality_residual(sys: &ParticleSystem, a: &Rational, b: &Rational) -> (f64, f64) {
        let fam = matching_family(sys, a, b).unwrap();
        let lambda = fam.weight_lambda().expect("parameters in orthogonality range");
        let measure = MarginalFamily::new(sys);
        let top = sys.cap().unwrap_or(3);
        let (mut worst, mut diag) = (0.0f64, f64::INFINITY);
        for k in 0..=top {
            for l in 0..=k {
                let g = |n: usize| {
                    orthogonal_d(sys, a, b, k, n).unwrap() * orthogonal_d(sys, a, b, l, n).unwrap()
                };
                let c = growth_constant(sys, a, b, k).unwrap() * growth_constant(sys, a, b, l).unwrap();
                let e = measure.expectation(&lambda, g, k + l, &c).unwrap();
                let v = e.midpoint_f64().abs() + to_f64(&e.width());
                if k == l {
                    diag = diag.min(v);
                } else {
                    worst = worst.max(v);
                }
            }
        }
        (worst, diag)
    }

    #[test]
    fn orthogonality_under_matched_weight() {
        let cases = [
            (ParticleSystem::irw(), int(1), int(-1)),
            (ParticleSystem::sip(int(1)).unwrap(), int(1), int(-1)),
            (ParticleSystem::sip(ratio(1, 2)).unwrap(), int(1), ratio(-1, 2)),
            (ParticleSystem::sep(3).unwrap(), int(1), ratio(-1, 2)),
        ];
        for (sys, a, b) in cases {
            let (off, diag) = orthogonality_residual(&sys, &a, &b);
            assert!(off < 1e-10 * diag, "{}: off {off} diag {diag}", sys.name());
        }
    }
}
