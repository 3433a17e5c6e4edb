//! Generating-function operators between `ℕ^V` and `ℝ_+^V`.
//!
//! `G f(z) = Σ_n f(n) Π_x z_x^{n_x}/n_x! · e^{−|z|}` with `Ḡ f` the part in
//! front of `e^{−|z|}`, `H g(n) = ∂^n|_{z=0} e^{|z|} g(z)`,
//! `H̄ g(n) = ∂^n g(0)` and the binomial transform
//! `A f(n) = Σ_{k ≤ n} Π_x C(n_x, k_x) f(k)`.
//!
//! Both `𝓛^{σ,β}` factors act through differences `∂_x − ∂_y`, which
//! commute with multiplication by `e^{±|z|}`. Every intertwining check is
//! therefore an exact polynomial identity on the un-normalized operators.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::duality::{
    cheap_d_unnormalized, hypergeometric_extended, DualityError, Family, Marked, SingleSiteDuality,
};
use crate::kernel::RateKernel;
use crate::measures::MarginalFamily;
use crate::rational::{binomial, factorial, falling, pow, Bracket, Rational};
use crate::series::{falling_factorial_coefficients, TruncatedSeries};
use crate::systems::{
    apply_generator, enumerate_configurations, DiffusionSystem, ParticleSystem, SystemError,
};

/// A finitely supported function on `ℕ^V`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FinSupportFn {
    nsites: usize,
    values: BTreeMap<Vec<usize>, Rational>,
}

impl FinSupportFn {
    pub fn new(nsites: usize) -> Self {
        Self { nsites, values: BTreeMap::new() }
    }

    pub fn delta(config: &[usize]) -> Self {
        let mut f = Self::new(config.len());
        f.set(config.to_vec(), Rational::one());
        f
    }

    pub fn from_pairs(nsites: usize, pairs: impl IntoIterator<Item = (Vec<usize>, Rational)>) -> Self {
        let mut f = Self::new(nsites);
        for (c, v) in pairs {
            f.set(c, v);
        }
        f
    }

    pub fn nsites(&self) -> usize {
        self.nsites
    }

    /// Zero values are not stored.
    pub fn set(&mut self, config: Vec<usize>, value: Rational) {
        assert_eq!(config.len(), self.nsites, "configuration length");
        if value.is_zero() {
            self.values.remove(&config);
        } else {
            self.values.insert(config, value);
        }
    }

    pub fn get(&self, config: &[usize]) -> Rational {
        self.values.get(config).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.values.iter()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest single-site entry in the support.
    pub fn max_entry(&self) -> usize {
        self.values.keys().flat_map(|c| c.iter().copied()).max().unwrap_or(0)
    }

    /// Support together with every configuration one particle move away
    /// from it: the only places where `L f` can be nonzero.
    fn generator_support(&self, kernel: &RateKernel) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for c in self.values.keys() {
            out.insert(c.clone());
            for e in kernel.edges() {
                for (a, b) in [(e.x, e.y), (e.y, e.x)] {
                    if c[b] > 0 {
                        let mut m = c.clone();
                        m[b] -= 1;
                        m[a] += 1;
                        out.insert(m);
                    }
                }
            }
        }
        out
    }
}

/// Residuals of an identity between functions on `ℕ^V`, evaluated on a
/// finite list of configurations.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ResidualTable {
    pub checked: usize,
    #[serde(serialize_with = "serialize_nonzero")]
    pub nonzero: Vec<(Vec<usize>, Rational)>,
}

fn serialize_nonzero<S: serde::Serializer>(v: &[(Vec<usize>, Rational)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (c, r) in v {
        seq.serialize_element(&(c, crate::rational::format_rational(r)))?;
    }
    seq.end()
}

impl ResidualTable {
    pub fn is_zero(&self) -> bool {
        self.nonzero.is_empty()
    }

    pub fn record(&mut self, config: &[usize], residual: Rational) {
        self.checked += 1;
        if !residual.is_zero() {
            self.nonzero.push((config.to_vec(), residual));
        }
    }

    pub fn merge(&mut self, other: ResidualTable) {
        self.checked += other.checked;
        self.nonzero.extend(other.nonzero);
    }
}

/// `Ḡ f(z) = Σ_n f(n) z^n / n!`.
pub fn g_bar(f: &FinSupportFn) -> TruncatedSeries {
    let mut s = TruncatedSeries::zero(f.nsites);
    for (n, v) in f.iter() {
        let den: Rational = n.iter().map(|&m| factorial(m)).product();
        s.add_term(n.iter().map(|&m| m as u32).collect(), v / den);
    }
    s
}

/// `G f = e^{−|z|} Ḡ f`.
pub fn g_apply(f: &FinSupportFn) -> Marked {
    Marked {
        prefactor: Bracket::exact(Rational::one()),
        exponent: vec![-Rational::one(); f.nsites],
        body: g_bar(f),
    }
}

fn check_polynomial(g: &TruncatedSeries) -> Result<(), IntertwineError> {
    if g.is_polynomial() {
        Ok(())
    } else {
        Err(IntertwineError::NotPolynomial)
    }
}

/// `H g(n) = Σ_{m ≤ n} c_m Π_x n_x!/(n_x − m_x)!` for `g = Σ c_m z^m`.
pub fn h_eval(g: &TruncatedSeries, n: &[usize]) -> Rational {
    let mut acc = Rational::zero();
    for (m, c) in g.terms() {
        if m.iter().zip(n).any(|(&mi, &ni)| mi as usize > ni) {
            continue;
        }
        let f: Rational = m.iter().zip(n).map(|(&mi, &ni)| falling(ni, mi as usize)).product();
        acc += c * f;
    }
    acc
}

/// `H̄ g(n) = Π_x n_x! · [z^n] g`.
pub fn h_bar(g: &TruncatedSeries, n: &[usize]) -> Rational {
    let m: Vec<u32> = n.iter().map(|&k| k as u32).collect();
    let c = g.coeff(&m);
    if c.is_zero() {
        return c;
    }
    c * n.iter().map(|&k| factorial(k)).product::<Rational>()
}

/// `H g` restricted to configurations with entries `≤ max_entry`; finitely
/// supported only in the sense of this restriction.
pub fn h_apply(g: &TruncatedSeries, max_entry: usize) -> Result<FinSupportFn, IntertwineError> {
    check_polynomial(g)?;
    let mut f = FinSupportFn::new(g.nvars());
    for n in enumerate_configurations(g.nvars(), max_entry, None) {
        let v = h_eval(g, &n);
        f.set(n, v);
    }
    Ok(f)
}

/// `A f(n) = Σ_{k ≤ n} Π_x C(n_x, k_x) f(k)`.
pub fn a_apply(f: &FinSupportFn, n: &[usize]) -> Rational {
    let mut acc = Rational::zero();
    for (k, v) in f.iter() {
        if k.iter().zip(n).any(|(a, b)| a > b) {
            continue;
        }
        let c: Rational = k.iter().zip(n).map(|(&ki, &ni)| binomial(ni, ki)).product();
        acc += c * v;
    }
    acc
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum IntertwineError {
    #[error("input must be a polynomial")]
    NotPolynomial,
    #[error("function has {got} sites, kernel has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Duality(#[from] DualityError),
}

fn check_sites(kernel: &RateKernel, n: usize) -> Result<(), IntertwineError> {
    if kernel.len() != n {
        return Err(IntertwineError::SizeMismatch { expected: kernel.len(), got: n });
    }
    Ok(())
}

/// `L f` as a finitely supported function for the uncapped lattice
/// operator `L^{σ,β}`.
pub fn lattice_apply(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    f: &FinSupportFn,
) -> Result<FinSupportFn, IntertwineError> {
    check_sites(kernel, f.nsites)?;
    let mut out = FinSupportFn::new(f.nsites);
    for n in f.generator_support(kernel) {
        let v = dsys.lattice_generator(kernel, |c| Some(f.get(c)), &n)?;
        out.set(n, v);
    }
    Ok(out)
}

/// `𝓛_left Ḡ f − Ḡ L_right f` where `L_right` is the lattice operator with
/// the parameters of `right`. With `left == right` this is
/// `e^{|z|}(𝓛 G f − G L f)`.
pub fn check_intertwining_pair(
    left: &DiffusionSystem,
    right: &DiffusionSystem,
    kernel: &RateKernel,
    f: &FinSupportFn,
) -> Result<TruncatedSeries, IntertwineError> {
    check_sites(kernel, f.nsites)?;
    let lhs = left.apply(kernel, &g_bar(f))?;
    let rhs = g_bar(&lattice_apply(right, kernel, f)?);
    Ok(lhs - rhs)
}

/// `𝓛^{σ,β} Ḡ f − Ḡ L^{σ,β} f`, the zero polynomial iff `𝓛 G = G L` on `f`.
pub fn check_intertwining(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    f: &FinSupportFn,
) -> Result<TruncatedSeries, IntertwineError> {
    check_intertwining_pair(dsys, dsys, kernel, f)
}

fn inverse_residuals(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    g: &TruncatedSeries,
    max_total: usize,
    op: fn(&TruncatedSeries, &[usize]) -> Rational,
) -> Result<ResidualTable, IntertwineError> {
    check_polynomial(g)?;
    check_sites(kernel, g.nvars())?;
    let lg = dsys.apply(kernel, g)?;
    let mut table = ResidualTable::default();
    for n in enumerate_configurations(kernel.len(), max_total, Some(max_total)) {
        let lhs = dsys.lattice_generator(kernel, |c| Some(op(g, c)), &n)?;
        let rhs = op(&lg, &n);
        table.record(&n, lhs - rhs);
    }
    Ok(table)
}

/// `L H g − H 𝓛 g` on every configuration with `|η| ≤ max_total`.
pub fn check_inverse_intertwining(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    g: &TruncatedSeries,
    max_total: usize,
) -> Result<ResidualTable, IntertwineError> {
    inverse_residuals(dsys, kernel, g, max_total, h_eval)
}

/// `L H̄ g − H̄ 𝓛 g`, the intertwining without the binomial transform.
pub fn check_hbar_intertwining(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    g: &TruncatedSeries,
    max_total: usize,
) -> Result<ResidualTable, IntertwineError> {
    inverse_residuals(dsys, kernel, g, max_total, h_bar)
}

/// `H g − A H̄ g` on every configuration with `|η| ≤ max_total`.
pub fn check_h_factorization(
    g: &TruncatedSeries,
    max_total: usize,
) -> Result<ResidualTable, IntertwineError> {
    check_polynomial(g)?;
    let mut hbar = FinSupportFn::new(g.nvars());
    for (m, _) in g.terms() {
        let n: Vec<usize> = m.iter().map(|&e| e as usize).collect();
        let v = h_bar(g, &n);
        hbar.set(n, v);
    }
    let mut table = ResidualTable::default();
    for n in enumerate_configurations(g.nvars(), max_total, Some(max_total)) {
        table.record(&n, h_eval(g, &n) - a_apply(&hbar, &n));
    }
    Ok(table)
}

/// `A L f − L A f` for the particle system `sys` on the given
/// configurations.
pub fn check_symmetry(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    f: &FinSupportFn,
    configs: &[Vec<usize>],
) -> Result<ResidualTable, IntertwineError> {
    check_sites(kernel, f.nsites)?;
    let mut lf = FinSupportFn::new(f.nsites);
    for n in f.generator_support(kernel) {
        if sys.check_configuration(kernel, &n).is_err() {
            continue;
        }
        let v = apply_generator(sys, kernel, |c| Some(f.get(c)), &n)?;
        lf.set(n, v);
    }
    let mut table = ResidualTable::default();
    for n in configs {
        let lhs = a_apply(&lf, n);
        let rhs = apply_generator(sys, kernel, |c| Some(a_apply(f, c)), n)?;
        table.record(n, lhs - rhs);
    }
    Ok(table)
}

/// `A L f − L A f` for the uncapped lattice operator `L^{σ,β}`.
pub fn check_symmetry_lattice(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    f: &FinSupportFn,
    configs: &[Vec<usize>],
) -> Result<ResidualTable, IntertwineError> {
    let lf = lattice_apply(dsys, kernel, f)?;
    let mut table = ResidualTable::default();
    for n in configs {
        let lhs = a_apply(&lf, n);
        let rhs = dsys.lattice_generator(kernel, |c| Some(a_apply(f, c)), n)?;
        table.record(n, lhs - rhs);
    }
    Ok(table)
}

/// Which argument of `d(k, n)` the generating function is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftSide {
    /// `n ↦ z`, giving `d(k, z)`.
    Right,
    /// `k ↦ v` after the right lift, giving `d(v, z)`.
    Left,
}

/// A duality function with one or both arguments lifted by `G`.
#[derive(Debug, Clone, PartialEq)]
pub enum Lifted {
    /// Rows `d(k, z)`, `k = 0, 1, ...`.
    Mid(Vec<Marked>),
    /// `d(v, z)` in variables `(v, z)`.
    Right(Marked),
}

/// `G` in `n` of `n ↦ d(k, n)`, with `k` allowed beyond the cap (the
/// `r ≤ cap` truncated extension).
///
/// Polynomial rows map through their falling-factorial coefficients,
/// `G[n^{(r)}](z) = z^r`; the cheap family is supported on `n = k` and keeps
/// the `e^{−z}` marker.
fn lift_row(d: &SingleSiteDuality, k: usize) -> Result<Marked, IntertwineError> {
    let sys = d.system();
    let one = Rational::one();
    let poly_row = |values: Vec<Rational>| {
        let c = falling_factorial_coefficients(&values);
        Marked::plain(TruncatedSeries::univariate(c))
    };
    Ok(match d.family() {
        Family::Cheap { lambda } => {
            let c = cheap_d_unnormalized(sys, lambda, k, k)?;
            Marked {
                prefactor: MarginalFamily::new(sys).partition(lambda).map_err(DualityError::from)?,
                exponent: vec![-one],
                body: TruncatedSeries::monomial(1, vec![k as u32], c / factorial(k)),
            }
        }
        Family::Trivial { a } => poly_row(vec![pow(a, k)]),
        Family::Classical => {
            let (_, beta) = sys.sigma_beta_params().ok_or_else(|| DualityError::NotSigmaBeta(sys.name()))?;
            let b = beta.recip();
            let values = (0..=k)
                .map(|n| hypergeometric_extended(sys, &Rational::zero(), &b, k, n))
                .collect::<Result<Vec<_>, _>>()?;
            poly_row(values)
        }
        Family::Orthogonal { a, b } => {
            let values =
                (0..=k).map(|n| hypergeometric_extended(sys, a, b, k, n)).collect::<Result<Vec<_>, _>>()?;
            poly_row(values)
        }
    })
}

/// Lifts a discrete duality function.
///
/// `Right` returns the rows `k = 0..=range`. `Left` applies the right lift
/// and then `G` in `k`, `Σ_k d(k, z) v^k/k! · e^{−v}`, as a series through
/// total degree `< range`; for a capped system the sum over `k` runs past
/// the cap except in the cheap family.
pub fn lift_duality(d: &SingleSiteDuality, side: LiftSide, range: usize) -> Result<Lifted, IntertwineError> {
    if d.signature() != crate::duality::Signature::Discrete {
        return Err(DualityError::SignatureMismatch {
            expected: crate::duality::Signature::Discrete,
            got: d.signature(),
        }
        .into());
    }
    match side {
        LiftSide::Right => {
            let rows = (0..=range)
                .filter(|&k| d.system().in_state_space(k))
                .map(|k| lift_row(d, k))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Lifted::Mid(rows))
        }
        LiftSide::Left => {
            if range == 0 {
                return Err(DualityError::OrderTooSmall(0).into());
            }
            let order = range as u32;
            let cheap = matches!(d.family(), Family::Cheap { .. });
            let mut body = TruncatedSeries::zero(2);
            let mut prefactor = Bracket::exact(Rational::one());
            let mut z_marker = Rational::zero();
            for k in 0..range {
                if cheap && !d.system().in_state_space(k) {
                    break;
                }
                let row = lift_row(d, k)?;
                prefactor = row.prefactor.clone();
                z_marker = row.exponent[0].clone();
                let kf = factorial(k);
                for (m, c) in row.body.terms() {
                    body.add_term(vec![k as u32, m[0]], c / &kf);
                }
            }
            if !(cheap && d.system().cap().is_some_and(|c| c < range)) {
                body = body.with_order(order);
            }
            Ok(Lifted::Right(Marked { prefactor, exponent: vec![-Rational::one(), z_marker], body }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::{mid_column, right_column};
    use crate::rational::{int, ratio};

    #[test]
    fn g_examples() {
        let f = FinSupportFn::delta(&[1]);
        assert_eq!(g_bar(&f), TruncatedSeries::var(1, 0));
        assert_eq!(g_apply(&FinSupportFn::delta(&[0])).body, TruncatedSeries::one(1));
        let f = FinSupportFn::delta(&[1, 1]);
        let g = g_apply(&f);
        assert_eq!(g.body, TruncatedSeries::monomial(2, vec![1, 1], int(1)));
        assert_eq!(g.exponent, vec![int(-1), int(-1)]);
    }

    #[test]
    fn h_examples() {
        let one = TruncatedSeries::one(1);
        let z = TruncatedSeries::var(1, 0);
        for n in 0..8 {
            assert_eq!(h_eval(&one, &[n]), int(1));
            assert_eq!(h_eval(&z, &[n]), Rational::from_integer(n.into()));
        }
        assert!(h_apply(&one.clone().with_order(3), 3).is_err());
    }

    #[test]
    fn a_examples() {
        let d0 = FinSupportFn::delta(&[0]);
        let d1 = FinSupportFn::delta(&[1]);
        for n in 0..8 {
            assert_eq!(a_apply(&d0, &[n]), int(1));
            assert_eq!(a_apply(&d1, &[n]), Rational::from_integer(n.into()));
        }
    }

    #[test]
    fn hg_is_identity() {
        let f = FinSupportFn::from_pairs(2, [(vec![0, 3], ratio(1, 2)), (vec![2, 1], int(-4))]);
        let g = g_bar(&f);
        // H(Gf) = H(e^{-|z|} Ḡf) = H̄ Ḡ f
        for n in enumerate_configurations(2, 5, None) {
            assert_eq!(h_bar(&g, &n), f.get(&n));
        }
    }

    #[test]
    fn intertwining_on_two_sites() {
        let kernel = RateKernel::path(2).unwrap();
        for (s, b) in [(0, 1), (1, 1), (1, 2), (-1, 1), (-1, 2)] {
            let dsys = DiffusionSystem::new(int(s), int(b)).unwrap();
            let f = FinSupportFn::delta(&[1, 0]);
            assert!(check_intertwining(&dsys, &kernel, &f).unwrap().is_zero());
            let g = TruncatedSeries::var(2, 0);
            assert!(check_inverse_intertwining(&dsys, &kernel, &g, 6).unwrap().is_zero());
        }
        let dsys = DiffusionSystem::bep(int(1)).unwrap();
        let f = FinSupportFn::delta(&[0, 0]);
        assert!(check_intertwining(&dsys, &kernel, &f).unwrap().is_zero());
    }

    #[test]
    fn mutated_drift_is_detected() {
        let kernel = RateKernel::path(2).unwrap();
        let good = DiffusionSystem::bep(int(1)).unwrap();
        let bad = DiffusionSystem::bep(int(2)).unwrap();
        let f = FinSupportFn::delta(&[1, 0]);
        assert!(!check_intertwining_pair(&good, &bad, &kernel, &f).unwrap().is_zero());
    }

    #[test]
    fn symmetry_for_sip() {
        let kernel = RateKernel::path(2).unwrap();
        let sip = ParticleSystem::sip(int(1)).unwrap();
        let f = FinSupportFn::from_pairs(2, [(vec![1, 2], int(1)), (vec![0, 1], ratio(-1, 3))]);
        let configs = enumerate_configurations(2, 5, None);
        assert!(check_symmetry(&sip, &kernel, &f, &configs).unwrap().is_zero());
    }

    #[test]
    fn lift_irw_classical() {
        let irw = ParticleSystem::irw();
        let d = SingleSiteDuality::discrete(&irw, Family::Classical).unwrap();
        let Lifted::Mid(rows) = lift_duality(&d, LiftSide::Right, 4).unwrap() else { panic!() };
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.body, mid_column(&irw, &Family::Classical, k).unwrap().body);
        }
        assert_eq!(rows[0].body, TruncatedSeries::one(1));
        let Lifted::Right(r) = lift_duality(&d, LiftSide::Left, 10).unwrap() else { panic!() };
        let t = right_column(&irw, &Family::Classical, 10).unwrap();
        assert_eq!(r.expanded(10), t.expanded(10));
    }
}
