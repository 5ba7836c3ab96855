//! Distances between discrete measures given as suprema of `∫ψ d(μ₁ − μ₂)` over a test
//! function class:
//!
//! | kind | test functions |
//! |---|---|
//! | [`MetricKind::NormDistance`] | Borel, `|ψ| ≤ 1` |
//! | [`MetricKind::Wasserstein1`] | `Lip(ψ) ≤ 1` |
//! | [`MetricKind::Flat`] | `|ψ| ≤ 1`, `Lip(ψ) ≤ 1` |
//! | [`MetricKind::MeasureTransmission`] | `|ψ| ≤ 1`, `Lip(ψ) ≤ 1` on each `(x_{i−1}, x_i]` separately |
//!
//! For atomic measures the flat supremum reduces to a linear program over the values of
//! `ψ` at the union support (the optimum extends piecewise linearly to the whole line).
//! The measure-transmission class is a product over the grid intervals, so its value is
//! the sum of the interval-wise flat programs.

mod envelope;
pub mod oracle;
pub mod simplex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BreakpointGrid;
use crate::measure::{DiscreteMeasure, SignedAtomVector};
use crate::scalar::Scalar;

pub use envelope::bounded_lipschitz_sup;
pub use oracle::{metric_oracle, ORACLE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[serde(rename = "norm")]
    NormDistance,
    #[serde(rename = "w1")]
    Wasserstein1,
    Flat,
    #[serde(rename = "mt")]
    MeasureTransmission,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] =
        [MetricKind::NormDistance, MetricKind::Wasserstein1, MetricKind::Flat, MetricKind::MeasureTransmission];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::NormDistance => "norm",
            MetricKind::Wasserstein1 => "w1",
            MetricKind::Flat => "flat",
            MetricKind::MeasureTransmission => "mt",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown metric kind `{s}` (expected norm, w1, flat or mt)"))
    }
}

/// Which exact solver evaluates the bounded-Lipschitz programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlatSolver {
    /// Sliding-window concave envelope sweep.
    #[default]
    Envelope,
    /// Dense tableau simplex.
    Simplex,
}

/// Total variation of the signed difference.
pub fn norm_distance<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>) -> S {
    m1.difference(m2).total_variation()
}

/// `∫|F₁ − F₂| dx`; requires equal positive masses.
pub fn wasserstein1<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>) -> Result<S> {
    let (a, b) = (m1.total_variation(), m2.total_variation());
    if (a - b).abs() > S::lit(1e-12) * S::one().max(a.max(b)) {
        return Err(Error::UnequalMass(a.as_f64(), b.as_f64()));
    }
    if a <= S::zero() {
        return Err(Error::ZeroMass);
    }
    let sigma = m1.difference(m2);
    let mut cdf = S::zero();
    let mut total = S::zero();
    for k in 0..sigma.len().saturating_sub(1) {
        cdf = cdf + sigma.weights[k];
        total = total + cdf.abs() * (sigma.positions[k + 1] - sigma.positions[k]);
    }
    Ok(total)
}

pub fn flat_metric<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>) -> S {
    let sigma = m1.difference(m2);
    bounded_lipschitz_sup(&sigma.positions, &sigma.weights)
}

pub fn mt_metric<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>, grid: &BreakpointGrid<S>) -> S {
    mt_metric_signed(&m1.difference(m2), grid, |p, w| bounded_lipschitz_sup(p, w))
}

/// Measure-transmission value of a signed difference, with a pluggable interval solver.
fn mt_metric_signed<S: Scalar>(
    sigma: &SignedAtomVector<S>,
    grid: &BreakpointGrid<S>,
    mut solve: impl FnMut(&[S], &[S]) -> S,
) -> S {
    let mut total = S::zero();
    let mut start = 0;
    while start < sigma.len() {
        let cell = grid.cell_of(sigma.positions[start]);
        let mut end = start + 1;
        while end < sigma.len() && grid.cell_of(sigma.positions[end]) == cell {
            end += 1;
        }
        total = total + solve(&sigma.positions[start..end], &sigma.weights[start..end]);
        start = end;
    }
    total
}

/// Flat metric through the simplex route.
pub fn flat_metric_simplex<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>) -> Result<S> {
    let sigma = m1.difference(m2);
    simplex::bounded_lipschitz_simplex(&sigma.positions, &sigma.weights).map(|r| r.0)
}

/// Measure-transmission metric through the simplex route.
pub fn mt_metric_simplex<S: Scalar>(
    m1: &DiscreteMeasure<S>,
    m2: &DiscreteMeasure<S>,
    grid: &BreakpointGrid<S>,
) -> Result<S> {
    let mut failure = None;
    let value = mt_metric_signed(&m1.difference(m2), grid, |p, w| match simplex::bounded_lipschitz_simplex(p, w) {
        Ok((v, _)) => v,
        Err(e) => {
            failure.get_or_insert(e);
            S::zero()
        }
    });
    failure.map_or(Ok(value), Err)
}

/// Dispatches on `kind`. The grid is required for the measure-transmission metric only.
pub fn distance<S: Scalar>(
    kind: MetricKind,
    m1: &DiscreteMeasure<S>,
    m2: &DiscreteMeasure<S>,
    grid: Option<&BreakpointGrid<S>>,
) -> Result<S> {
    distance_with(kind, m1, m2, grid, FlatSolver::Envelope)
}

pub fn distance_with<S: Scalar>(
    kind: MetricKind,
    m1: &DiscreteMeasure<S>,
    m2: &DiscreteMeasure<S>,
    grid: Option<&BreakpointGrid<S>>,
    solver: FlatSolver,
) -> Result<S> {
    match (kind, solver) {
        (MetricKind::NormDistance, _) => Ok(norm_distance(m1, m2)),
        (MetricKind::Wasserstein1, _) => wasserstein1(m1, m2),
        (MetricKind::Flat, FlatSolver::Envelope) => Ok(flat_metric(m1, m2)),
        (MetricKind::Flat, FlatSolver::Simplex) => flat_metric_simplex(m1, m2),
        (MetricKind::MeasureTransmission, s) => {
            let grid = grid.ok_or(Error::MissingGrid)?;
            match s {
                FlatSolver::Envelope => Ok(mt_metric(m1, m2, grid)),
                FlatSolver::Simplex => mt_metric_simplex(m1, m2, grid),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(raw: &[(f64, f64)]) -> DiscreteMeasure<f64> {
        DiscreteMeasure::new(raw.iter().copied()).unwrap()
    }

    fn d(x: f64) -> DiscreteMeasure<f64> {
        DiscreteMeasure::dirac(x)
    }

    #[test]
    fn norm_cases() {
        let eps = 0.1;
        assert_eq!(norm_distance(&d(0.0), &d(eps)), 2.0);
        let a = m(&[(0.0, 0.3), (1.0, 0.7)]);
        assert_eq!(norm_distance(&a, &a), 0.0);
        assert_eq!(norm_distance(&m(&[(0.0, 2.0)]), &m(&[(0.0, 1.0)])), 1.0);
    }

    #[test]
    fn wasserstein_cases() {
        let eps = 0.1;
        assert!((wasserstein1(&d(0.0), &d(eps)).unwrap() - eps).abs() < 1e-15);
        let a = m(&[(0.0, 0.3), (1.0, 0.7)]);
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        // oracle: the only plan moves 0.5 by 1 from each side
        let w = wasserstein1(&m(&[(0.0, 0.5), (2.0, 0.5)]), &m(&[(1.0, 1.0)])).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        assert!(matches!(wasserstein1(&m(&[(0.0, 2.0)]), &d(0.0)), Err(Error::UnequalMass(..))));
        assert!(matches!(
            wasserstein1::<f64>(&DiscreteMeasure::zero(), &DiscreteMeasure::zero()),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn flat_cases() {
        let eps = 0.25;
        assert!((flat_metric(&d(0.0), &d(eps)) - eps).abs() < 1e-15);
        assert!((flat_metric(&d(0.0), &d(5.0)) - 2.0).abs() < 1e-15);
        assert_eq!(flat_metric(&d(0.0), &DiscreteMeasure::zero()), 1.0);
    }

    #[test]
    fn mt_cases() {
        let grid = BreakpointGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let x1 = 1.0;
        let eps = 0.25;
        assert!((mt_metric(&d(x1), &d(x1 + eps), &grid) - 2.0).abs() < 1e-15);
        assert!((mt_metric(&d(x1), &d(x1 - eps), &grid) - eps).abs() < 1e-15);
        let a = m(&[(0.5, 0.3), (1.0, 0.7), (1.7, 0.1)]);
        assert_eq!(mt_metric(&a, &a, &grid), 0.0);
    }

    #[test]
    fn mt_far_left_perturbation_is_capped_by_the_interval() {
        // ε beyond x₁ − x₀: the perturbed atom leaves (x₀, x₁] and the pieces decouple
        let grid = BreakpointGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let v = mt_metric(&d(1.0), &d(1.0 - 1.5), &grid);
        assert!((v - 2.0).abs() < 1e-15);
        let oracle = metric_oracle(MetricKind::MeasureTransmission, &d(1.0), &d(-0.5), Some(&grid)).unwrap();
        assert!((v - oracle).abs() < 1e-12);
    }

    #[test]
    fn simplex_route_agrees() {
        let grid = BreakpointGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let a = m(&[(0.1, 0.4), (0.7, 1.2), (1.0, 0.3), (1.4, 0.9)]);
        let b = m(&[(0.3, 0.8), (1.0, 0.6), (1.05, 0.2), (1.9, 0.5)]);
        let f1 = flat_metric(&a, &b);
        let f2 = flat_metric_simplex(&a, &b).unwrap();
        assert!((f1 - f2).abs() < 1e-12, "{f1} vs {f2}");
        let t1 = mt_metric(&a, &b, &grid);
        let t2 = mt_metric_simplex(&a, &b, &grid).unwrap();
        assert!((t1 - t2).abs() < 1e-12, "{t1} vs {t2}");
    }

    #[test]
    fn kind_parsing() {
        for k in MetricKind::ALL {
            assert_eq!(k.name().parse::<MetricKind>().unwrap(), k);
        }
        assert!("wasserstein".parse::<MetricKind>().is_err());
        assert!(matches!(distance(MetricKind::MeasureTransmission, &d(0.0), &d(1.0), None), Err(Error::MissingGrid)));
    }
}
