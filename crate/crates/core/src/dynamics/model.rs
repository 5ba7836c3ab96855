use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pwl::PiecewiseLinearFn;
use crate::error::{Error, Result};
use crate::grid::BreakpointGrid;
use crate::measure::DiscreteMeasure;
use crate::scalar::Scalar;

/// Coefficients of the transport system: speed `g₁(v)`, growth `p₁(v)p₂(x)` and
/// outflow rates `c_i(v)` at the breakpoints, where `v` is the mass sitting at `x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCoefficients<S> {
    grid: BreakpointGrid<S>,
    g1: PiecewiseLinearFn<S>,
    p1: PiecewiseLinearFn<S>,
    /// `p2[i − 1]` is `p₂` on `(x_{i−1}, x_i]`; zero outside `(x₀, x_N]`.
    p2: Vec<PiecewiseLinearFn<S>>,
    c: Vec<PiecewiseLinearFn<S>>,
}

impl<S: Scalar> ModelCoefficients<S> {
    /// Validates the coefficient tables. An empty `p2` means `p ≡ 0`.
    pub fn new(
        grid: BreakpointGrid<S>,
        g1: PiecewiseLinearFn<S>,
        p1: PiecewiseLinearFn<S>,
        p2: Vec<PiecewiseLinearFn<S>>,
        c: Vec<PiecewiseLinearFn<S>>,
    ) -> Result<Self> {
        let n = grid.last_index();
        if g1.inf() <= S::zero() {
            return Err(Error::AssumptionViolated(format!("g1>0 (table minimum {})", g1.inf())));
        }
        if c.len() != n + 1 {
            return Err(Error::InvalidTable(format!("need {} outflow rates c_0..c_N, got {}", n + 1, c.len())));
        }
        if let Some(i) = c.iter().position(|ci| ci.inf() < S::zero()) {
            return Err(Error::AssumptionViolated(format!("c_i>=0 (c_{i} has minimum {})", c[i].inf())));
        }
        if !c[n].is_zero() {
            return Err(Error::AssumptionViolated("c_N=0".into()));
        }
        let p2 = if p2.is_empty() { vec![PiecewiseLinearFn::constant(S::zero()); n] } else { p2 };
        if p2.len() != n {
            return Err(Error::InvalidTable(format!("need {n} p2 tables, one per grid interval, got {}", p2.len())));
        }
        Ok(Self { grid, g1, p1, p2, c })
    }

    /// Constant speed `g`, constant rates `c_0..c_{N−1}` (`c_N = 0` appended), no growth.
    pub fn constant(grid: BreakpointGrid<S>, g: S, rates: &[S]) -> Result<Self> {
        let mut c: Vec<_> = rates.iter().map(|&r| PiecewiseLinearFn::constant(r)).collect();
        c.push(PiecewiseLinearFn::constant(S::zero()));
        Self::new(grid, PiecewiseLinearFn::constant(g), PiecewiseLinearFn::constant(S::zero()), Vec::new(), c)
    }

    pub fn grid(&self) -> &BreakpointGrid<S> {
        &self.grid
    }

    pub fn g1(&self) -> &PiecewiseLinearFn<S> {
        &self.g1
    }

    pub fn p1(&self) -> &PiecewiseLinearFn<S> {
        &self.p1
    }

    pub fn p2_tables(&self) -> &[PiecewiseLinearFn<S>] {
        &self.p2
    }

    pub fn c(&self, i: usize) -> &PiecewiseLinearFn<S> {
        &self.c[i]
    }

    pub fn rates(&self) -> &[PiecewiseLinearFn<S>] {
        &self.c
    }

    /// `p₂(x)` with `x_i` counted in `(x_{i−1}, x_i]`.
    pub fn p2(&self, x: S) -> S {
        let cell = self.grid.cell_of(x);
        if cell == 0 || cell > self.grid.last_index() {
            return S::zero();
        }
        self.p2[cell - 1].eval(x)
    }

    pub fn has_growth(&self) -> bool {
        !self.p1.is_zero() && self.p2.iter().any(|f| !f.is_zero())
    }

    pub fn sup_g1(&self) -> S {
        self.g1.sup()
    }

    pub fn lip_g1(&self) -> S {
        self.g1.lipschitz()
    }

    pub fn sup_c(&self) -> S {
        self.c.iter().map(|f| f.sup()).fold(S::zero(), S::max)
    }

    pub fn lip_c(&self) -> S {
        self.c.iter().map(|f| f.lipschitz()).fold(S::zero(), S::max)
    }

    /// `T_max = min gap / sup g₁`.
    pub fn t_max(&self) -> S {
        self.grid.min_gap() / self.sup_g1()
    }

    /// Same model with every `c_i` multiplied by `k`.
    pub fn with_scaled_rates(&self, k: S) -> Self {
        Self { c: self.c.iter().map(|f| f.scaled(k)).collect(), ..self.clone() }
    }
}

/// Time-stepping parameters of the particle solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct SolverSettings<S> {
    pub dt: S,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: S,
    #[serde(default = "one")]
    pub quad_particles_per_step: usize,
    /// Outflow atoms closer than this are merged into their mass-weighted centroid.
    #[serde(default = "S::zero")]
    pub merge_tolerance: S,
    /// Atoms lighter than this are folded into their nearest neighbour.
    #[serde(default = "S::zero")]
    pub drop_tolerance: S,
}

fn one() -> usize {
    1
}

impl<S: Scalar> SolverSettings<S> {
    pub fn new(dt: S, horizon: S) -> Self {
        Self { dt, horizon, quad_particles_per_step: 1, merge_tolerance: S::zero(), drop_tolerance: S::zero() }
    }
}

/// On-disk model description.
///
/// ```json
/// {
///   "grid": [0, 1, 2],
///   "g1": [[0, 1], [2, 0.5]],
///   "p1": 0,
///   "p2": [0, 0],
///   "c": [0.5, 1, 0],
///   "initial": { "mu1": [[0.5, 1]], "mu2": [[0.6, 1]] },
///   "solver": { "dt": 0.002, "T": 1 }
/// }
/// ```
///
/// Every coefficient accepts a knot table `[[v, value], ...]` or a bare constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub grid: BreakpointGrid<f64>,
    pub g1: PiecewiseLinearFn<f64>,
    #[serde(default = "zero_table")]
    pub p1: PiecewiseLinearFn<f64>,
    #[serde(default)]
    pub p2: Vec<PiecewiseLinearFn<f64>>,
    pub c: Vec<PiecewiseLinearFn<f64>>,
    #[serde(default)]
    pub initial: BTreeMap<String, DiscreteMeasure<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSettings<f64>>,
}

fn zero_table() -> PiecewiseLinearFn<f64> {
    PiecewiseLinearFn::constant(0.0)
}

impl ModelFile {
    pub fn model(&self) -> Result<ModelCoefficients<f64>> {
        ModelCoefficients::new(self.grid.clone(), self.g1.clone(), self.p1.clone(), self.p2.clone(), self.c.clone())
    }

    pub fn from_model(model: &ModelCoefficients<f64>) -> Self {
        Self {
            grid: model.grid.clone(),
            g1: model.g1.clone(),
            p1: model.p1.clone(),
            p2: model.p2.clone(),
            c: model.c.clone(),
            initial: BTreeMap::new(),
            solver: None,
        }
    }
}
