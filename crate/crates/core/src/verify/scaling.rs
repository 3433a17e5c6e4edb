//! Convergence of the extended exclusion operator to `𝓛^{−1,γ}`.

use num_traits::Signed;
use serde::Serialize;

use super::VerifyError;
use crate::kernel::RateKernel;
use crate::rational::{fit_slope, format_rational, to_f64, Rational};
use crate::series::TruncatedSeries;
use crate::systems::{apply_extended_sep, DiffusionSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub lattice: String,
    pub limit: String,
    pub error: String,
    pub error_f64: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// `−d log(error) / d log N` by least squares; absent when some error
    /// vanishes.
    pub order: Option<f64>,
}

/// `|L^N f(⌊Nz⌋/N) − 𝓛^{−1,γ} f(z)|` for each `N`, in exact arithmetic.
pub fn scaling_limit_check(
    gamma: &Rational,
    kernel: &RateKernel,
    f: &TruncatedSeries,
    z: &[Rational],
    ns: &[u64],
) -> Result<ScalingReport, VerifyError> {
    if !f.is_polynomial() {
        return Err(VerifyError::InvalidInput("f must be a polynomial".into()));
    }
    if z.len() != kernel.len() || f.nvars() != kernel.len() {
        return Err(VerifyError::InvalidInput("dimension mismatch".into()));
    }
    if z.iter().any(|c| c.is_negative()) {
        return Err(VerifyError::InvalidInput("z must be nonnegative".into()));
    }
    if ns.iter().any(|&n| n < 10) {
        return Err(VerifyError::InvalidInput("N values must be >= 10".into()));
    }
    let dsys = DiffusionSystem::sep_limit(gamma.clone())?;
    let limit = dsys.apply(kernel, f)?.eval(z);
    let mut rows = Vec::new();
    for &n in ns {
        let nr = Rational::from_integer(n.into());
        let eta: Vec<usize> = z
            .iter()
            .map(|c| {
                (c * &nr)
                    .floor()
                    .to_integer()
                    .try_into()
                    .map_err(|_| VerifyError::InvalidInput("N z too large".into()))
            })
            .collect::<Result<_, _>>()?;
        let lattice = apply_extended_sep(gamma, n, kernel, |p| f.eval(p), &eta)?;
        let err = (&lattice - &limit).abs();
        rows.push(ScalingRow {
            n,
            lattice: format_rational(&lattice),
            limit: format_rational(&limit),
            error_f64: to_f64(&err),
            error: format_rational(&err),
        });
    }
    let order = if rows.iter().any(|r| r.error_f64 == 0.0) || rows.len() < 2 {
        None
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.error_f64.ln()).collect();
        fit_slope(&xs, &ys).map(|s| -s)
    };
    Ok(ScalingReport { rows, order })
}
