//! Euler–Maruyama sampling of the energy diffusions with exact conservation.
//!
//! Energies are stored in fixed point (`2^-64` resolution, `u128`). Each
//! edge moves the same integer amount out of one site and into the other,
//! so the total is invariant bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DiffusionSystem, SystemError};
use crate::kernel::RateKernel;
use crate::rational::{to_f64, Rational};

/// Maximum number of step halvings before a step is declared failed.
pub const MAX_HALVINGS: u32 = 40;

/// Halvings that refine the Brownian path before increments are redrawn.
const BRIDGE_DEPTH: u32 = 20;

const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnergyConfiguration {
    ticks: Vec<u128>,
}

impl EnergyConfiguration {
    pub fn from_f64(z: &[f64]) -> Result<Self, SystemError> {
        let mut ticks = Vec::with_capacity(z.len());
        for &x in z {
            if !(x >= 0.0 && x.is_finite() && x < 1e18) {
                return Err(SystemError::InvalidParameter(format!(
                    "energy {x} must be finite and nonnegative"
                )));
            }
            ticks.push((x * SCALE).round() as u128);
        }
        Ok(Self { ticks })
    }

    pub fn from_rationals(z: &[Rational]) -> Result<Self, SystemError> {
        Self::from_f64(&z.iter().map(to_f64).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.ticks[x] as f64 / SCALE
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|x| self.get(x)).collect()
    }

    /// Total energy in fixed-point units; invariant under the dynamics.
    pub fn total_ticks(&self) -> u128 {
        self.ticks.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.total_ticks() as f64 / SCALE
    }
}

fn edge_list(kernel: &RateKernel) -> Vec<(usize, usize, f64)> {
    kernel.edges().into_iter().map(|e| (e.x, e.y, to_f64(&e.q))).collect()
}

/// Advances `z` by time `t` with nominal step `dt`.
///
/// Per edge `{x,y}` with rate `q`:
/// `dz_x = qβ(z_y−z_x)dt + √(2qσ z_x z_y) dW`, `dz_y = −dz_x`.
/// A step that would make a coordinate negative is retried with half the
/// step, up to [`MAX_HALVINGS`] times. For the first halvings the Brownian
/// increment of the failed step is split by a Brownian bridge rather than
/// redrawn, so rejections do not condition the noise.
pub fn diffusion_path<R: Rng + ?Sized>(
    dsys: &DiffusionSystem,
    kernel: &RateKernel,
    z: &mut EnergyConfiguration,
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<(), SystemError> {
    let beta = to_f64(&dsys.beta);
    let sigma = to_f64(&dsys.sigma);
    let edges = edge_list(kernel);
    let mut now = 0.0;
    let mut next = vec![0i128; z.len()];
    // Pending sub-steps: (length, halvings so far, Brownian increments).
    let mut pending: Vec<(f64, u32, Vec<f64>)> = Vec::new();
    while now < t && t - now > 1e-15 * t.max(1.0) {
        if pending.is_empty() {
            let h = dt.min(t - now);
            let dw = (0..edges.len()).map(|_| h.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
            pending.push((h, 0, dw));
        }
        let (h, depth, dw) = pending.pop().expect("nonempty");
        let zf = z.to_f64();
        for (n, &tk) in next.iter_mut().zip(&z.ticks) {
            *n = tk as i128;
        }
        for (k, &(x, y, q)) in edges.iter().enumerate() {
            let drift = q * beta * (zf[y] - zf[x]) * h;
            let diff = 2.0 * q * sigma * zf[x] * zf[y];
            let noise = if diff > 0.0 { diff.sqrt() * dw[k] } else { 0.0 };
            let flow = ((drift + noise) * SCALE).round() as i128;
            next[x] += flow;
            next[y] -= flow;
        }
        if next.iter().all(|&n| n >= 0) {
            for (tk, &n) in z.ticks.iter_mut().zip(&next) {
                *tk = n as u128;
            }
            now += h;
            continue;
        }
        if depth >= MAX_HALVINGS {
            return Err(SystemError::StepHalvingExceeded(MAX_HALVINGS));
        }
        let half = h / 2.0;
        let (first, second): (Vec<f64>, Vec<f64>) = if depth < BRIDGE_DEPTH {
            let first: Vec<f64> = dw
                .iter()
                .map(|w| w / 2.0 + (h / 4.0).sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let second = dw.iter().zip(&first).map(|(w, a)| w - a).collect();
            (first, second)
        } else {
            // Near an attainable boundary the refined path may stay
            // infeasible; fall back to fresh increments.
            let mut fresh = || -> Vec<f64> {
                (0..dw.len()).map(|_| half.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect()
            };
            (fresh(), fresh())
        };
        pending.push((half, depth + 1, second));
        pending.push((half, depth + 1, first));
    }
    Ok(())
}

/// BEP(α) sample at time `t` from `z0`.
pub fn simulate_bep(
    kernel: &RateKernel,
    alpha: &Rational,
    z0: &EnergyConfiguration,
    t: f64,
    dt: f64,
    seed: u64,
) -> Result<EnergyConfiguration, SystemError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SystemError::InvalidTime(format!("t = {t}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SystemError::InvalidTime(format!("dt = {dt}")));
    }
    if z0.len() != kernel.len() {
        return Err(SystemError::SizeMismatch { expected: kernel.len(), got: z0.len() });
    }
    let dsys = DiffusionSystem::bep(alpha.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = z0.clone();
    diffusion_path(&dsys, kernel, &mut z, t, dt, &mut rng)?;
    Ok(z)
}
