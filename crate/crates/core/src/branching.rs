//! Galton-Watson survival probabilities and the derived structural
//! constants for 2-out random digraphs.
//!
//! The fan-in of a uniform vertex looks like a branching process whose
//! offspring law is the in-degree distribution, Poisson(2) in the limit.
//! Its survival probability `x*` (about 0.797) is the asymptotic giant-SCC
//! fraction, and `2 / (-ln(4 x* (1 - x*)))` scales the logarithmic bound on
//! everything living outside the giant.

use crate::degree::EmpiricalInDegree;
use crate::error::{Error, Result};

/// Offspring distribution: the analytic Poisson(2) or a finite table.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringPmf {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Poisson2,
    Table(Vec<f64>),
}

impl OffspringPmf {
    pub fn poisson2() -> Self {
        Self { kind: Kind::Poisson2 }
    }

    /// Finite-support pmf; must be nonnegative and sum to 1 within 1e-12.
    pub fn from_table(table: Vec<f64>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidPmf("empty table".into()));
        }
        if table.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidPmf("negative or non-finite mass".into()));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPmf(format!("mass sums to {total}")));
        }
        Ok(Self {
            kind: Kind::Table(table),
        })
    }

    /// Empirical in-degree histogram as an offspring law.
    pub fn from_empirical(xi: &EmpiricalInDegree) -> Result<Self> {
        Self::from_table(xi.xi.clone())
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::Poisson2 => 2.0,
            Kind::Table(t) => t.iter().enumerate().map(|(k, &p)| k as f64 * p).sum(),
        }
    }

    pub fn p0(&self) -> f64 {
        match &self.kind {
            Kind::Poisson2 => (-2.0f64).exp(),
            Kind::Table(t) => t[0],
        }
    }
}

/// Probability generating function `f(x) = sum_k p_k x^k` on [0, 1].
///
/// Exactly `e^{2x-2}` for the analytic Poisson(2); Horner's scheme for
/// tables.
pub fn pgf(pmf: &OffspringPmf, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::PgfArgOutOfRange(x));
    }
    Ok(match &pmf.kind {
        Kind::Poisson2 => (2.0 * x - 2.0).exp(),
        Kind::Table(t) => t.iter().rev().fold(0.0, |acc, &p| acc * x + p),
    })
}

/// Survival probability of the supercritical branching process: returns
/// `x*` where `y = 1 - x*` is the unique root of `f(y) = y` in (0, 1).
///
/// Bisection on `[tol, 1 - tol]` down to interval width `tol`; the residual
/// `|f(1 - x*) - (1 - x*)|` is at most `2 tol`. Needs mean > 1 and
/// `pmf[0] > 0`, otherwise no interior root exists.
pub fn survival_probability(pmf: &OffspringPmf, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol < 0.25) {
        return Err(Error::InvalidConfig(format!(
            "tolerance {tol} outside (0, 0.25)"
        )));
    }
    let mean = pmf.mean();
    let p0 = pmf.p0();
    if mean <= 1.0 || p0 <= 0.0 {
        return Err(Error::NoInteriorFixedPoint { mean, p0 });
    }
    let g = |y: f64| pgf(pmf, y).expect("y stays within [0,1]") - y;
    let mut lo = tol;
    let mut hi = 1.0 - tol;
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return Err(Error::NoInteriorFixedPoint { mean, p0 });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(1.0 - 0.5 * (lo + hi))
}

/// `2 / (-ln(4 x* (1 - x*)))`, the per-log-N constant bounding the second
/// strongly connected component and the domain reachable outside the giant.
pub fn second_scc_constant(x_star: f64) -> Result<f64> {
    if !(x_star > 0.5 && x_star < 1.0) {
        return Err(Error::SingularFixedPoint(x_star));
    }
    Ok(2.0 / -(4.0 * x_star * (1.0 - x_star)).ln())
}

/// `ln ln n / ln 2`, the asymptotic bound on the shortest path from any
/// vertex into the giant component.
pub fn path_length_bound(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::PathBoundDomain(n));
    }
    Ok((n as f64).ln().ln() / std::f64::consts::LN_2)
}
