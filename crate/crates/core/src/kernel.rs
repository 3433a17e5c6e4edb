//! Finite site sets and jump-rate kernels.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{int, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("a kernel needs at least two sites, got {0}")]
    TooFewSites(usize),
    #[error("site index {0} out of range")]
    SiteOutOfRange(usize),
    #[error("unknown site label {0:?}")]
    UnknownSite(String),
    #[error("duplicate site label {0:?}")]
    DuplicateSite(String),
    #[error("negative rate for ({0}, {1})")]
    NegativeRate(usize, usize),
    #[error("malformed rate {0:?}")]
    MalformedRate(String),
    #[error("kernel spec must give either a geometry or explicit edges")]
    IncompleteSpec,
    #[error("unknown geometry {0:?}")]
    UnknownGeometry(String),
}

/// One unordered edge with symmetrized rate `q = p(x,y) + p(y,x) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub x: usize,
    pub y: usize,
    pub q: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateKernel {
    labels: Vec<String>,
    rates: BTreeMap<(usize, usize), Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DiagonalRate { site: String },
    Disconnected { components: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl RateKernel {
    /// Kernel on `n` sites labelled `1..=n` with no rates yet.
    pub fn with_sites(n: usize) -> Self {
        Self::with_labels((1..=n).map(|i| i.to_string()).collect()).expect("numeric labels are distinct")
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self, KernelError> {
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(KernelError::DuplicateSite(l.clone()));
            }
        }
        Ok(Self { labels, rates: BTreeMap::new() })
    }

    pub fn path(n: usize) -> Result<Self, KernelError> {
        if n < 2 {
            return Err(KernelError::TooFewSites(n));
        }
        let mut k = Self::with_sites(n);
        for x in 0..n - 1 {
            k.set_rate(x, x + 1, int(1))?;
            k.set_rate(x + 1, x, int(1))?;
        }
        Ok(k)
    }

    pub fn cycle(n: usize) -> Result<Self, KernelError> {
        if n < 2 {
            return Err(KernelError::TooFewSites(n));
        }
        let mut k = Self::path(n)?;
        if n > 2 {
            k.set_rate(n - 1, 0, int(1))?;
            k.set_rate(0, n - 1, int(1))?;
        }
        Ok(k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize, KernelError> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| KernelError::UnknownSite(label.to_string()))
    }

    /// Sets `p(x,y)`; a zero rate removes the entry.
    pub fn set_rate(&mut self, x: usize, y: usize, rate: Rational) -> Result<(), KernelError> {
        let n = self.len();
        for s in [x, y] {
            if s >= n {
                return Err(KernelError::SiteOutOfRange(s));
            }
        }
        if rate.is_negative() {
            return Err(KernelError::NegativeRate(x, y));
        }
        if rate.is_zero() {
            self.rates.remove(&(x, y));
        } else {
            self.rates.insert((x, y), rate);
        }
        Ok(())
    }

    pub fn rate(&self, x: usize, y: usize) -> Rational {
        self.rates.get(&(x, y)).cloned().unwrap_or_else(Rational::zero)
    }

    /// Unordered edges `x < y` with positive symmetrized rate, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut sym: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for (&(x, y), r) in &self.rates {
            if x == y {
                continue;
            }
            *sym.entry((x.min(y), x.max(y))).or_insert_with(Rational::zero) += r;
        }
        sym.into_iter().filter(|(_, q)| !q.is_zero()).map(|((x, y), q)| Edge { x, y, q }).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (&(x, y), r) in &self.rates {
            if x == y && !r.is_zero() {
                violations.push(Violation::DiagonalRate { site: self.labels[x].clone() });
            }
        }
        let components = self.components();
        if components > 1 {
            violations.push(Violation::Disconnected { components });
        }
        ValidationReport { violations }
    }

    fn components(&self) -> usize {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in self.edges() {
            let (a, b) = (find(&mut parent, e.x), find(&mut parent, e.y));
            parent[a] = b;
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }
}

/// Structured-text description of a kernel.
///
/// Either `geometry = "path" | "cycle"` with `sites = n`, or explicit
/// `labels` plus `edges = [[x, y, "num/den"], ...]` giving directed rates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub geometry: Option<String>,
    pub sites: Option<usize>,
    pub labels: Option<Vec<String>>,
    pub edges: Option<Vec<(String, String, String)>>,
}

impl KernelSpec {
    pub fn build(&self) -> Result<RateKernel, KernelError> {
        if let Some(g) = &self.geometry {
            let n = self.sites.ok_or(KernelError::IncompleteSpec)?;
            return match g.as_str() {
                "path" => RateKernel::path(n),
                "cycle" => RateKernel::cycle(n),
                other => Err(KernelError::UnknownGeometry(other.to_string())),
            };
        }
        let edges = self.edges.as_ref().ok_or(KernelError::IncompleteSpec)?;
        let labels = match &self.labels {
            Some(l) => l.clone(),
            None => {
                let mut seen = Vec::new();
                for (x, y, _) in edges {
                    for s in [x, y] {
                        if !seen.contains(s) {
                            seen.push(s.clone());
                        }
                    }
                }
                seen
            }
        };
        let mut k = RateKernel::with_labels(labels)?;
        for (x, y, r) in edges {
            let rate = parse_rational(r).map_err(|_| KernelError::MalformedRate(r.clone()))?;
            let (ix, iy) = (k.index_of(x)?, k.index_of(y)?);
            let total = k.rate(ix, iy) + rate;
            k.set_rate(ix, iy, total)?;
        }
        Ok(k)
    }
}
