//! Exact duality residuals with discrete dual variables.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::VerifyError;
use crate::duality::{mid_column, DualityError, SingleSiteDuality};
use crate::kernel::RateKernel;
use crate::rational::{lcm_of_denominators, Rational};
use crate::series::TruncatedSeries;
use crate::systems::{apply_generator, enumerate_configurations, moved, DiffusionSystem, ParticleSystem};

/// `(L D(·, η))(ξ) − (L D(ξ, ·))(η)` for the factorized self-duality
/// function `D = Π d(ξ_x, η_x)`, in exact arithmetic (for the cheap family
/// the exact representative without `Z_λ` is used).
pub fn duality_residual_discrete(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    d: &SingleSiteDuality,
    xi: &[usize],
    eta: &[usize],
) -> Result<Rational, VerifyError> {
    let dd = |a: &[usize], b: &[usize]| -> Option<Rational> {
        let mut acc = Rational::from_integer(1.into());
        for (&k, &n) in a.iter().zip(b) {
            let v = d.eval_exact(k, n).ok()?;
            if v.is_zero() {
                return Some(v);
            }
            acc *= v;
        }
        Some(acc)
    };
    let lhs = apply_generator(sys, kernel, |c| dd(c, eta), xi)?;
    let rhs = apply_generator(sys, kernel, |c| dd(xi, c), eta)?;
    Ok(lhs - rhs)
}

/// Outcome of a residual sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub checked: usize,
    pub nonzero: usize,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.nonzero == 0
    }

    pub fn merge(&mut self, other: &SweepReport) {
        self.checked += other.checked;
        self.nonzero += other.nonzero;
    }
}

fn to_i128(x: &BigInt) -> Result<i128, VerifyError> {
    x.to_i128().ok_or(VerifyError::Overflow)
}

/// Integer image of a rational table after clearing all denominators.
fn scaled_table(values: &[Vec<Rational>]) -> Result<Vec<Vec<i128>>, VerifyError> {
    let l = Rational::from_integer(lcm_of_denominators(values.iter().flatten()));
    values
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    let s = v * &l;
                    to_i128(s.numer())
                })
                .collect()
        })
        .collect()
}

/// Residual of the self-duality relation on every pair `(ξ, η)` with
/// `|ξ| ≤ max_dual_total` and entries of `η` at most `max_entry` (both
/// also bounded by the cap).
///
/// The single-site table and the jump rates are each multiplied by the
/// least common multiple of their denominators; a residual is zero exactly
/// when its integer image is, so the sweep runs in `i128` and reports
/// [`VerifyError::Overflow`] instead of wrapping.
pub fn sweep_discrete(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    d: &SingleSiteDuality,
    max_dual_total: usize,
    max_entry: usize,
) -> Result<SweepReport, VerifyError> {
    let nsites = kernel.len();
    let clip = |m: usize| sys.cap().map_or(m, |c| m.min(c));
    let kmax = clip(max_dual_total);
    let emax = clip(max_entry);
    // η moves can create an entry emax + 1 (beyond the cap the rate is 0).
    let ntab = clip(emax + 1).max(kmax);
    let dvals: Vec<Vec<Rational>> = (0..=ntab)
        .map(|k| (0..=ntab).map(|n| d.eval_exact(k, n)).collect::<Result<Vec<_>, DualityError>>())
        .collect::<Result<_, _>>()?;
    let dt = scaled_table(&dvals)?;
    let edges = kernel.edges();
    let mut rates = Vec::new();
    for e in &edges {
        for _ in 0..2 {
            let mut t = Vec::new();
            for a in 0..=ntab {
                let mut row = Vec::new();
                for b in 0..=ntab {
                    row.push(&e.q * sys.move_rate(a, b)?);
                }
                t.push(row);
            }
            rates.push(t);
        }
    }
    // every move uses the same table in both directions; flatten to one
    let rt = scaled_table(&rates.iter().flatten().cloned().collect::<Vec<_>>())?;
    let per = ntab + 1;
    let rate = |m: usize, a: usize, b: usize| rt[m * per + a][b];
    let moves: Vec<(usize, usize)> = edges.iter().flat_map(|e| [(e.x, e.y), (e.y, e.x)]).collect();

    let xis: Vec<Vec<usize>> = enumerate_configurations(nsites, kmax, Some(max_dual_total));
    let etas: Vec<Vec<usize>> = enumerate_configurations(nsites, emax, None);

    let prod = |xi: &[usize], eta: &[usize]| -> Option<i128> {
        let mut acc: i128 = 1;
        for (&k, &n) in xi.iter().zip(eta) {
            let v = dt[k][n];
            if v == 0 {
                return Some(0);
            }
            acc = acc.checked_mul(v)?;
        }
        Some(acc)
    };
    let side = |moving: &[usize], fixed: &[usize], moving_is_xi: bool| -> Option<i128> {
        let f0 = if moving_is_xi { prod(moving, fixed)? } else { prod(fixed, moving)? };
        let mut acc: i128 = 0;
        let mut buf = moving.to_vec();
        for (m, &(a, b)) in moves.iter().enumerate() {
            if moving[a] == 0 {
                continue;
            }
            let r = rate(m, moving[a], moving[b]);
            if r == 0 {
                continue;
            }
            buf[a] -= 1;
            buf[b] += 1;
            let f1 = if moving_is_xi { prod(&buf, fixed)? } else { prod(fixed, &buf)? };
            buf[a] += 1;
            buf[b] -= 1;
            acc = acc.checked_add(r.checked_mul(f1.checked_sub(f0)?)?)?;
        }
        Some(acc)
    };
    let results: Vec<Option<(usize, usize)>> = xis
        .par_iter()
        .map(|xi| {
            let mut nonzero = 0;
            for eta in &etas {
                let l = side(xi, eta, true)?;
                let r = side(eta, xi, false)?;
                if l != r {
                    nonzero += 1;
                }
            }
            Some((etas.len(), nonzero))
        })
        .collect();
    let mut report = SweepReport::default();
    for r in results {
        let (c, nz) = r.ok_or(VerifyError::Overflow)?;
        report.checked += c;
        report.nonzero += nz;
    }
    Ok(report)
}

/// Middle-column rows `d(k, z)`, `k = 0..=kmax`, as plain polynomials.
///
/// Markers are only accepted when they are the same `e^{−z}` on every
/// row: both operators commute with `e^{−|z|}`, so it can be dropped.
pub fn mid_rows(d: &SingleSiteDuality, kmax: usize) -> Result<Vec<TruncatedSeries>, VerifyError> {
    let mut rows = Vec::new();
    let mut marker: Option<Vec<Rational>> = None;
    for k in 0..=kmax {
        if !d.system().in_state_space(k) {
            break;
        }
        let m = mid_column(d.system(), d.family(), k)?;
        match &marker {
            None => marker = Some(m.exponent.clone()),
            Some(e) if *e != m.exponent => {
                return Err(VerifyError::InvalidInput("rows carry different markers".into()))
            }
            _ => {}
        }
        rows.push(m.body);
    }
    Ok(rows)
}

/// `D(ξ, z) = Π_x rows[ξ_x](z_x)` in `kernel.len()` variables.
fn product_series(rows: &[TruncatedSeries], xi: &[usize]) -> Result<TruncatedSeries, VerifyError> {
    let n = xi.len();
    let mut acc = TruncatedSeries::one(n);
    for (x, &k) in xi.iter().enumerate() {
        let row = rows.get(k).ok_or_else(|| VerifyError::InvalidInput(format!("no row for k = {k}")))?;
        acc = acc.mul(&row.embed(n, &[x]));
    }
    Ok(acc)
}

/// `L_ξ D(·, z) − 𝓛_z D(ξ, ·)` with `L` the particle generator of `sys`
/// acting on the discrete argument and `𝓛` the operator of `dsys` on the
/// continuum one. `rows[k]` is the single-site function `d(k, z)`.
pub fn duality_residual_mixed(
    sys: &ParticleSystem,
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    rows: &[TruncatedSeries],
    xi: &[usize],
) -> Result<TruncatedSeries, VerifyError> {
    sys.check_configuration(kernel, xi)?;
    let d0 = product_series(rows, xi)?;
    let mut lhs = TruncatedSeries::zero(xi.len());
    for e in kernel.edges() {
        for (a, b) in [(e.x, e.y), (e.y, e.x)] {
            let r = sys.move_rate(xi[a], xi[b])?;
            if r.is_zero() {
                continue;
            }
            let m = moved(xi, a, b).expect("positive rate implies a particle");
            lhs = lhs + (product_series(rows, &m)? - d0.clone()).scale(&(&e.q * r));
        }
    }
    let rhs = dsys.apply(kernel, &d0)?;
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::{laplace_recover, Family, Signature};
    use crate::rational::{int, ratio};

    #[test]
    fn sweep_matches_rational_route() {
        let kernel = RateKernel::path(3).unwrap();
        let sys = ParticleSystem::sip(ratio(1, 2)).unwrap();
        let d = SingleSiteDuality::discrete(&sys, Family::Orthogonal { a: ratio(-1, 2), b: int(1) }).unwrap();
        let sweep = sweep_discrete(&sys, &kernel, &d, 2, 3).unwrap();
        let mut checked = 0;
        for xi in enumerate_configurations(3, 2, Some(2)) {
            for eta in enumerate_configurations(3, 3, None) {
                assert!(duality_residual_discrete(&sys, &kernel, &d, &xi, &eta).unwrap().is_zero());
                checked += 1;
            }
        }
        assert_eq!(sweep, SweepReport { checked, nonzero: 0 });
    }

    #[test]
    fn sweep_detects_wrong_function() {
        let kernel = RateKernel::path(2).unwrap();
        let sip = ParticleSystem::sip(int(1)).unwrap();
        let irw = ParticleSystem::irw();
        // IRW's classical function is not a self-duality for SIP(1).
        let d = SingleSiteDuality::discrete(&irw, Family::Classical).unwrap();
        let r = sweep_discrete(&sip, &kernel, &d, 2, 3).unwrap();
        assert!(r.nonzero > 0);
        assert!(
            !duality_residual_discrete(&sip, &kernel, &d, &[1, 1], &[2, 1]).unwrap().is_zero()
                || !duality_residual_discrete(&sip, &kernel, &d, &[2, 0], &[1, 2]).unwrap().is_zero()
        );
    }

    #[test]
    fn empty_dual_configuration() {
        let kernel = RateKernel::path(2).unwrap();
        let sip = ParticleSystem::sip(int(1)).unwrap();
        let d = SingleSiteDuality::discrete(&sip, Family::Classical).unwrap();
        assert!(duality_residual_discrete(&sip, &kernel, &d, &[0, 0], &[3, 1]).unwrap().is_zero());
    }

    #[test]
    fn sip_bep_mixed() {
        let kernel = RateKernel::path(2).unwrap();
        let alpha = ratio(3, 2);
        let sip = ParticleSystem::sip(alpha.clone()).unwrap();
        let bep = DiffusionSystem::bep(alpha.clone()).unwrap();
        let d = SingleSiteDuality::new(&sip, Family::Classical, Signature::DiscreteContinuum).unwrap();
        let rows = mid_rows(&d, 3).unwrap();
        for xi in [[1, 0], [0, 0], [2, 1]] {
            assert!(duality_residual_mixed(&sip, &bep, &kernel, &rows, &xi).unwrap().is_zero());
        }
        let rows: Vec<_> = (0..=3).map(|k| laplace_recover(&alpha, &int(1), &int(-1), k).unwrap()).collect();
        assert!(duality_residual_mixed(&sip, &bep, &kernel, &rows, &[2, 0]).unwrap().is_zero());
        let wrong = DiffusionSystem::bep(int(1)).unwrap();
        assert!(!duality_residual_mixed(&sip, &wrong, &kernel, &rows, &[1, 0]).unwrap().is_zero());
    }
}
