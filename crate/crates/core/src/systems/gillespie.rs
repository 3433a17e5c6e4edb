//! Event-driven exact sampling of the particle dynamics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{ParticleSystem, SystemError};
use crate::kernel::RateKernel;
use crate::rational::to_f64;

/// Floating-point copy of `u`, `v` and the kernel, sized for a fixed
/// particle number.
#[derive(Debug, Clone)]
pub struct RateTable {
    u: Vec<f64>,
    v: Vec<f64>,
    moves: Vec<(usize, usize, f64)>,
    nsites: usize,
}

impl RateTable {
    /// Tables for configurations holding at most `max_particles` particles.
    pub fn new(sys: &ParticleSystem, kernel: &RateKernel, max_particles: usize) -> Result<Self, SystemError> {
        let mut u = Vec::with_capacity(max_particles + 1);
        let mut v = Vec::with_capacity(max_particles + 1);
        for n in 0..=max_particles {
            u.push(to_f64(&sys.u(n).ok_or(SystemError::RateUndefined(n))?));
            v.push(to_f64(&sys.v(n).ok_or(SystemError::RateUndefined(n))?));
        }
        let mut moves = Vec::new();
        for e in kernel.edges() {
            let q = to_f64(&e.q);
            moves.push((e.x, e.y, q));
            moves.push((e.y, e.x, q));
        }
        Ok(Self { u, v, moves, nsites: kernel.len() })
    }

    fn rate(&self, eta: &[usize], m: usize) -> f64 {
        let (x, y, q) = self.moves[m];
        q * self.u[eta[x]] * self.v[eta[y]]
    }
}

/// Jump times and the state entered at each (the first entry is time 0).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<usize>>,
}

/// Runs the chain from `eta` for time `t`, in place.
pub fn gillespie_path<R: Rng + ?Sized>(
    table: &RateTable,
    eta: &mut [usize],
    t: f64,
    rng: &mut R,
    mut log: Option<&mut Trajectory>,
) {
    debug_assert_eq!(eta.len(), table.nsites);
    let mut rates = vec![0.0; table.moves.len()];
    let mut now = 0.0;
    if let Some(l) = log.as_deref_mut() {
        l.times.push(0.0);
        l.states.push(eta.to_vec());
    }
    loop {
        let mut total = 0.0;
        for (m, r) in rates.iter_mut().enumerate() {
            *r = table.rate(eta, m);
            total += *r;
        }
        if total <= 0.0 {
            return;
        }
        let wait: f64 = Exp1.sample(rng);
        now += wait / total;
        if now > t {
            return;
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = rates.len() - 1;
        for (m, r) in rates.iter().enumerate() {
            if target < *r {
                chosen = m;
                break;
            }
            target -= r;
        }
        // Guard against rounding landing on a zero-rate move.
        if rates[chosen] <= 0.0 {
            chosen = rates.iter().rposition(|&r| r > 0.0).expect("total > 0");
        }
        let (x, y, _) = table.moves[chosen];
        eta[x] -= 1;
        eta[y] += 1;
        if let Some(l) = log.as_deref_mut() {
            l.times.push(now);
            l.states.push(eta.to_vec());
        }
    }
}

/// Samples `η(t)` from `η0` with a ChaCha8 stream seeded by `seed`.
pub fn gillespie_simulate(
    sys: &ParticleSystem,
    kernel: &RateKernel,
    eta0: &[usize],
    t: f64,
    seed: u64,
    record: bool,
) -> Result<(Vec<usize>, Option<Trajectory>), SystemError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SystemError::InvalidTime(format!("t = {t}")));
    }
    sys.check_configuration(kernel, eta0)?;
    let total: usize = eta0.iter().sum();
    let table = RateTable::new(sys, kernel, total + 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eta = eta0.to_vec();
    let mut traj = record.then(Trajectory::default);
    gillespie_path(&table, &mut eta, t, &mut rng, traj.as_mut());
    Ok((eta, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn zero_time_is_identity() {
        let k = RateKernel::path(3).unwrap();
        let sys = ParticleSystem::sip(int(1)).unwrap();
        let (eta, _) = gillespie_simulate(&sys, &k, &[2, 0, 1], 0.0, 7, false).unwrap();
        assert_eq!(eta, vec![2, 0, 1]);
    }

    #[test]
    fn full_exclusion_is_frozen() {
        let k = RateKernel::cycle(4).unwrap();
        let sys = ParticleSystem::sep(1).unwrap();
        let (eta, traj) = gillespie_simulate(&sys, &k, &[1, 1, 1, 1], 10.0, 3, true).unwrap();
        assert_eq!(eta, vec![1, 1, 1, 1]);
        assert_eq!(traj.unwrap().times, vec![0.0]);
    }

    #[test]
    fn negative_time_rejected() {
        let k = RateKernel::path(2).unwrap();
        assert!(gillespie_simulate(&ParticleSystem::irw(), &k, &[1, 0], -1.0, 0, false).is_err());
    }

    #[test]
    fn same_seed_same_path() {
        let k = RateKernel::path(3).unwrap();
        let sys = ParticleSystem::sip(ratio(1, 2)).unwrap();
        let a = gillespie_simulate(&sys, &k, &[3, 1, 0], 2.0, 11, true).unwrap();
        let b = gillespie_simulate(&sys, &k, &[3, 1, 0], 2.0, 11, true).unwrap();
        assert_eq!(a, b);
        for s in &a.1.unwrap().states {
            assert_eq!(s.iter().sum::<usize>(), 4);
        }
    }

    #[test]
    fn irw_mean_occupation() {
        // One edge with total rate 1: each walker switches sites at rate 1,
        // so E η_1(t) = 5 (1 + e^{-2t}) / 2.
        let mut k = RateKernel::with_sites(2);
        k.set_rate(0, 1, ratio(1, 2)).unwrap();
        k.set_rate(1, 0, ratio(1, 2)).unwrap();
        let sys = ParticleSystem::irw();
        let table = RateTable::new(&sys, &k, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let mut eta = [5, 0];
            gillespie_path(&table, &mut eta, 1.0, &mut rng, None);
            let x = eta[0] as f64;
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = 5.0 * (1.0 + (-2.0f64).exp()) / 2.0;
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }
}
