//! Solution spaces of the first-function constraints for factorized
//! self-duality (discrete) and SIP/BEP duality (continuum).

use num_traits::{One, Zero};
use serde::Serialize;

use super::{nullspace, VerifyError};
use crate::rational::{format_rational, usize_r, Rational};
use crate::series::TruncatedSeries;

/// Rate tables `u, v` on `0..=M` of a system with generator
/// `Σ p(x,y) u(η_x) v(η_y)(f(η^{x,y}) − f(η))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfDualityTables {
    pub u: Vec<Rational>,
    pub v: Vec<Rational>,
    /// Ratio multiplying the jump terms of the moving configuration
    /// relative to the dual particle's own jump (1 for symmetric kernels).
    pub rate_ratio: Rational,
    /// Largest occupation, if the state space is finite.
    pub cap: Option<usize>,
}

impl SelfDualityTables {
    pub fn new(u: Vec<Rational>, v: Vec<Rational>) -> Self {
        Self { u, v, rate_ratio: Rational::one(), cap: None }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Characterization {
    pub unknowns: usize,
    pub equations: usize,
    pub dimension: usize,
    #[serde(serialize_with = "serialize_basis")]
    pub basis: Vec<Vec<Rational>>,
}

fn serialize_basis<S: serde::Serializer>(b: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
    let strings: Vec<Vec<String>> = b.iter().map(|v| v.iter().map(format_rational).collect()).collect();
    serde::Serialize::serialize(&strings, s)
}

/// `u(n) = u(1) n` and `v(n) = v(0) + (v(1) − v(0)) n` on the whole table
/// (or up to the cap). Only the products `u·v` enter the generator, so
/// `u(1)` is a time scale.
pub fn has_affine_form(t: &SelfDualityTables) -> bool {
    let top = t.cap.map_or(t.u.len() - 1, |c| c.min(t.u.len() - 1));
    let u1 = &t.u[1];
    let dv = &t.v[1] - &t.v[0];
    (0..=top).all(|n| t.u[n] == u1 * usize_r(n) && t.v[n] == &t.v[0] + &dv * usize_r(n))
}

/// Solution space of the first single-site function `d(1, 0..=M)` under
/// the self-duality relation with one dual particle at `x`:
///
/// `r·[u(η_x)v(η_y)(d(η_x−1) − d(η_x)) + u(η_y)v(η_x)(d(η_x+1) − d(η_x))]
///   = u(1)v(0)(d(η_y) − d(η_x))`
///
/// imposed on every pair `(η_x, η_y)` with entries `≤ M−1` (and `≤ cap`).
pub fn characterize_selfduality(t: &SelfDualityTables) -> Result<Characterization, VerifyError> {
    if t.u.len() != t.v.len() {
        return Err(VerifyError::InvalidInput(format!("u has {} entries, v has {}", t.u.len(), t.v.len())));
    }
    if t.u.len() < 5 {
        return Err(VerifyError::InvalidInput("tables must cover 0..=M with M >= 4".into()));
    }
    if !t.u[0].is_zero() {
        return Err(VerifyError::InvalidInput("u(0) must vanish".into()));
    }
    let m = t.u.len() - 1;
    let top = t.cap.map_or(m, |c| c.min(m));
    let pair_max = (m - 1).min(top);
    let ncols = top + 1;
    let own = &t.u[1] * &t.v[0];
    let mut rows = Vec::new();
    for ex in 0..=pair_max {
        for ey in 0..=pair_max {
            let mut row = vec![Rational::zero(); ncols];
            let out = &t.rate_ratio * &t.u[ex] * &t.v[ey];
            if ex > 0 {
                row[ex - 1] += &out;
                row[ex] -= &out;
            }
            let inn = &t.rate_ratio * &t.u[ey] * &t.v[ex];
            if !inn.is_zero() {
                if ex + 1 > top {
                    return Err(VerifyError::InvalidInput(format!(
                        "positive rate into occupation {} beyond the state space",
                        ex + 1
                    )));
                }
                row[ex + 1] += &inn;
                row[ex] -= &inn;
            }
            row[ey] -= &own;
            row[ex] += &own;
            rows.push(row);
        }
    }
    let basis = nullspace(&rows, ncols);
    Ok(Characterization { unknowns: ncols, equations: rows.len(), dimension: basis.len(), basis })
}

/// How the continuum first-function constraint is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuumMode {
    /// As a polynomial identity in both `z_x` and `z_y`.
    FullEdge,
    /// On the diagonal `z_x = z_y = z` only, where it reads `z² d''(z) = 0`.
    Diagonal,
}

/// Polynomial solutions `d(1, z) = Σ_{j ≤ M} c_j z^j` of the SIP(α)/BEP(α)
/// duality relation with one dual particle:
/// `α(d(z_y) − d(z_x)) = −α(z_x − z_y) d'(z_x) + z_x z_y d''(z_x)`.
pub fn characterize_continuum_first_dual(
    alpha: &Rational,
    degree: usize,
    mode: ContinuumMode,
) -> Result<Characterization, VerifyError> {
    characterize_continuum_first_dual_with(alpha, degree, mode, &Rational::one())
}

/// As [`characterize_continuum_first_dual`] with the second-order term
/// multiplied by `diffusion`.
pub fn characterize_continuum_first_dual_with(
    alpha: &Rational,
    degree: usize,
    mode: ContinuumMode,
    diffusion: &Rational,
) -> Result<Characterization, VerifyError> {
    let ncols = degree + 1;
    // Residual of z^j in variables (z_x, z_y).
    let column = |j: usize| -> TruncatedSeries {
        let e = j as u32;
        let mut s = TruncatedSeries::zero(2);
        s.add_term(vec![0, e], alpha.clone());
        s.add_term(vec![e, 0], -alpha.clone());
        if j >= 1 {
            // + α(z_x − z_y) j z_x^{j−1}
            let c = alpha * usize_r(j);
            s.add_term(vec![e, 0], c.clone());
            s.add_term(vec![e - 1, 1], -c);
        }
        if j >= 2 {
            s.add_term(vec![e - 1, 1], -(diffusion * usize_r(j * (j - 1))));
        }
        match mode {
            ContinuumMode::FullEdge => s,
            ContinuumMode::Diagonal => {
                let mut d = TruncatedSeries::zero(1);
                for (m, c) in s.terms() {
                    d.add_term(vec![m[0] + m[1]], c.clone());
                }
                d
            }
        }
    };
    let columns: Vec<TruncatedSeries> = (0..ncols).map(column).collect();
    let mut monomials: Vec<Vec<u32>> =
        columns.iter().flat_map(|c| c.terms().map(|(m, _)| m.clone())).collect();
    monomials.sort();
    monomials.dedup();
    let rows: Vec<Vec<Rational>> =
        monomials.iter().map(|m| columns.iter().map(|c| c.coeff(m)).collect()).collect();
    let basis = nullspace(&rows, ncols);
    Ok(Characterization { unknowns: ncols, equations: rows.len(), dimension: basis.len(), basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn table(f: impl Fn(i64) -> Rational, m: i64) -> Vec<Rational> {
        (0..=m).map(f).collect()
    }

    #[test]
    fn sip_has_affine_solutions() {
        let t = SelfDualityTables::new(table(int, 6), table(|n| int(1 + n), 6));
        let c = characterize_selfduality(&t).unwrap();
        assert_eq!(c.dimension, 2);
        assert!(has_affine_form(&t));
        // d(1,n) = 1 and d(1,n) = n
        for b in &c.basis {
            for n in 2..=6 {
                assert_eq!(&b[n] - &b[n - 1], &b[1] - &b[0]);
            }
        }
    }

    #[test]
    fn quadratic_u_is_trivial() {
        let t = SelfDualityTables::new(table(|n| int(n * n), 6), table(|_| int(1), 6));
        assert_eq!(characterize_selfduality(&t).unwrap().dimension, 1);
        assert!(!has_affine_form(&t));
    }

    #[test]
    fn exclusion_with_cap() {
        let t = SelfDualityTables::new(table(int, 5), table(|n| int(1 - n), 5)).with_cap(1);
        assert_eq!(characterize_selfduality(&t).unwrap().dimension, 2);
        let short = SelfDualityTables::new(table(int, 3), table(|_| int(1), 3));
        assert!(characterize_selfduality(&short).is_err());
    }

    #[test]
    fn continuum_first_dual_is_affine() {
        for mode in [ContinuumMode::FullEdge, ContinuumMode::Diagonal] {
            let c = characterize_continuum_first_dual(&int(1), 5, mode).unwrap();
            assert_eq!(c.dimension, 2);
            assert_eq!(
                c.basis,
                vec![
                    vec![int(1), int(0), int(0), int(0), int(0), int(0)],
                    vec![int(0), int(1), int(0), int(0), int(0), int(0)],
                ]
            );
        }
        assert_eq!(
            characterize_continuum_first_dual(&int(1), 1, ContinuumMode::FullEdge).unwrap().dimension,
            2
        );
        let broken =
            characterize_continuum_first_dual_with(&int(1), 5, ContinuumMode::Diagonal, &int(0)).unwrap();
        assert_eq!(broken.dimension, 6);
    }
}
