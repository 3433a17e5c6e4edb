//! Monte Carlo check of `Ê_ξ D(ξ(t), η) = E_η D(ξ, η(t))`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::VerifyError;
use crate::duality::SingleSiteDuality;
use crate::kernel::RateKernel;
use crate::rational::to_f64;
use crate::systems::{gillespie_path, sector, ParticleSystem, RateTable, SystemError};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticReport {
    pub nsamples: usize,
    pub t: f64,
    /// Estimate of `E_ξ D(ξ(t), η0)` (dual process moving).
    pub lhs_mean: f64,
    pub lhs_se: f64,
    /// Estimate of `E_η D(ξ0, η(t))` (original process moving).
    pub rhs_mean: f64,
    pub rhs_se: f64,
    /// `(lhs − rhs) / √(se_l² + se_r²)`, zero when both sides are exact.
    pub z_score: f64,
    /// `E_ξ D(ξ(t), η0)` from the matrix exponential on the `ξ`-sector.
    pub exact: f64,
    pub z_lhs_exact: f64,
    pub z_rhs_exact: f64,
}

fn z(diff: f64, se: f64) -> f64 {
    if se == 0.0 {
        if diff.abs() <= 1e-12 * (1.0 + diff.abs()) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    } else {
        diff / se
    }
}

/// `E_start g(η(t))` for the chain restricted to the sector of `start`.
pub fn sector_expectation(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    start: &[usize],
    t: f64,
    g: impl Fn(&[usize]) -> f64,
) -> Result<f64, VerifyError> {
    sys.check_configuration(kernel, start)?;
    let total: usize = start.iter().sum();
    let states = sector(kernel.len(), total, sys.cap().unwrap_or(total));
    let index: HashMap<&[usize], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let n = states.len();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (i, s) in states.iter().enumerate() {
        for e in kernel.edges() {
            for (a, b) in [(e.x, e.y), (e.y, e.x)] {
                let r = to_f64(&(&e.q * sys.move_rate(s[a], s[b])?));
                if r == 0.0 {
                    continue;
                }
                let mut m = s.clone();
                m[a] -= 1;
                m[b] += 1;
                let j = index[m.as_slice()];
                q[(i, j)] += r;
                q[(i, i)] -= r;
            }
        }
    }
    let p = (q * t).exp();
    let i0 = index[start];
    Ok((0..n).map(|j| p[(i0, j)] * g(&states[j])).sum())
}

fn mc_mean(
    table: &RateTable,
    start: &[usize],
    t: f64,
    nsamples: usize,
    seed: u64,
    stream_base: u64,
    g: &(dyn Fn(&[usize]) -> f64 + Sync),
) -> (f64, f64) {
    let nchunks = nsamples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + c as u64);
            let count = CHUNK.min(nsamples - c * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let mut eta = start.to_vec();
            for _ in 0..count {
                eta.copy_from_slice(start);
                gillespie_path(table, &mut eta, t, &mut rng, None);
                let v = g(&eta);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    // fixed summation order keeps the result independent of scheduling
    let (s, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = nsamples as f64;
    let mean = s / n;
    let var = if nsamples > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Estimates both sides of the duality relation with `nsamples` paths
/// each, using ChaCha8 streams `2c` (dual side) and `2c + 1` of `seed`
/// for chunk `c`, and compares with the exact `ξ`-sector value.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_duality_check(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    d: &SingleSiteDuality,
    xi0: &[usize],
    eta0: &[usize],
    t: f64,
    nsamples: usize,
    seed: u64,
) -> Result<StochasticReport, VerifyError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SystemError::InvalidTime(format!("t = {t}")).into());
    }
    if nsamples == 0 {
        return Err(VerifyError::InvalidInput("nsamples must be positive".into()));
    }
    sys.check_configuration(kernel, xi0)?;
    sys.check_configuration(kernel, eta0)?;
    let kmax: usize = xi0.iter().sum();
    let nmax: usize = eta0.iter().sum();
    let top = kmax.max(nmax);
    let mut tab = vec![vec![0.0; top + 1]; top + 1];
    for (k, row) in tab.iter_mut().enumerate() {
        for (n, cell) in row.iter_mut().enumerate() {
            if sys.in_state_space(k) && sys.in_state_space(n) {
                *cell = to_f64(&d.eval_exact(k, n)?);
            }
        }
    }
    let dd = |a: &[usize], b: &[usize]| -> f64 { a.iter().zip(b).map(|(&k, &n)| tab[k][n]).product() };
    let exact = sector_expectation(sys, kernel, xi0, t, |x| dd(x, eta0))?;

    let dual_table = RateTable::new(sys, kernel, kmax + 1)?;
    let table = RateTable::new(sys, kernel, nmax + 1)?;
    let nchunks = nsamples.div_ceil(CHUNK) as u64;
    let g_l = |x: &[usize]| dd(x, eta0);
    let g_r = |y: &[usize]| dd(xi0, y);
    let (lhs_mean, lhs_se) = mc_mean(&dual_table, xi0, t, nsamples, seed, 0, &g_l);
    let (rhs_mean, rhs_se) = mc_mean(&table, eta0, t, nsamples, seed, nchunks, &g_r);
    Ok(StochasticReport {
        nsamples,
        t,
        lhs_mean,
        lhs_se,
        rhs_mean,
        rhs_se,
        z_score: z(lhs_mean - rhs_mean, (lhs_se * lhs_se + rhs_se * rhs_se).sqrt()),
        exact,
        z_lhs_exact: z(lhs_mean - exact, lhs_se),
        z_rhs_exact: z(rhs_mean - exact, rhs_se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::Family;
    use crate::rational::int;

    #[test]
    fn zero_time_is_exact() {
        let sys = ParticleSystem::sip(int(1)).unwrap();
        let kernel = RateKernel::path(2).unwrap();
        let d = SingleSiteDuality::discrete(&sys, Family::Classical).unwrap();
        let r = stochastic_duality_check(&sys, &kernel, &d, &[1, 0], &[3, 1], 0.0, 100, 1).unwrap();
        assert_eq!(r.z_score, 0.0);
        assert_eq!(r.lhs_mean, 3.0);
        assert_eq!(r.rhs_mean, 3.0);
        assert!((r.exact - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sip_sector_oracle() {
        // One dual particle on path(2) jumps with rate q·u(1)v(0) = 2, so
        // E η_{X_t} = 3 P(X_t = 0) + P(X_t = 1) = 2 + e^{−4t}.
        let sys = ParticleSystem::sip(int(1)).unwrap();
        let kernel = RateKernel::path(2).unwrap();
        let d = SingleSiteDuality::discrete(&sys, Family::Classical).unwrap();
        let r = stochastic_duality_check(&sys, &kernel, &d, &[1, 0], &[3, 1], 0.5, 20_000, 7).unwrap();
        let expected = 2.0 + (-2.0f64).exp();
        assert!((r.exact - expected).abs() < 1e-12, "{}", r.exact);
        assert!(r.z_lhs_exact.abs() < 4.0 && r.z_rhs_exact.abs() < 4.0, "{r:?}");
    }

    #[test]
    fn frozen_exclusion() {
        let sys = ParticleSystem::sep(1).unwrap();
        let kernel = RateKernel::path(2).unwrap();
        let d = SingleSiteDuality::discrete(&sys, Family::Classical).unwrap();
        let r = stochastic_duality_check(&sys, &kernel, &d, &[1, 0], &[1, 1], 1.0, 500, 3).unwrap();
        assert_eq!((r.lhs_mean, r.rhs_mean, r.rhs_se), (1.0, 1.0, 0.0));
    }
}
