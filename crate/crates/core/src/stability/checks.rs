use serde::Serialize;

use super::{compute_min_g1, open_before, StabilityConstants};
use crate::dynamics::{ModelCoefficients, StepIntegral, Trajectory};
use crate::error::{Error, Result};
use crate::grid::BreakpointGrid;
use crate::metrics::{flat_metric, mt_metric};
use crate::scalar::Scalar;

/// Distances between two trajectories sampled on the same time steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSeries<S> {
    pub dt: S,
    pub times: Vec<S>,
    pub rho_mt: Vec<S>,
    pub rho_flat: Vec<S>,
    pub v1: Vec<S>,
    pub v2: Vec<S>,
}

impl<S: Scalar> PairSeries<S> {
    /// Truncates to the shorter trajectory. Both must use the same `dt`.
    pub fn new(traj1: &Trajectory<S>, traj2: &Trajectory<S>, grid: &BreakpointGrid<S>) -> Result<Self> {
        if traj1.dt != traj2.dt {
            return Err(Error::InvalidStep(format!("trajectories use dt {} and {}", traj1.dt, traj2.dt)));
        }
        let len = traj1.len().min(traj2.len());
        let (a, b) = (&traj1.snapshots[..len], &traj2.snapshots[..len]);
        Ok(Self {
            dt: traj1.dt,
            times: traj1.times[..len].to_vec(),
            rho_mt: a.iter().zip(b).map(|(x, y)| mt_metric(x, y, grid)).collect(),
            rho_flat: a.iter().zip(b).map(|(x, y)| flat_metric(x, y)).collect(),
            v1: traj1.v_series[..len].to_vec(),
            v2: traj2.v_series[..len].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn rho0(&self) -> S {
        self.rho_mt.first().copied().unwrap_or(S::zero())
    }

    /// `∫₀^{t_k} |v₁ − v₂|` with `v` constant on each step.
    fn v_gap(&self) -> Vec<S> {
        let mut acc = S::zero();
        let mut out = Vec::with_capacity(self.len());
        out.push(acc);
        for k in 1..self.len() {
            acc = acc + (self.v1[k - 1] - self.v2[k - 1]).abs() * self.dt;
            out.push(acc);
        }
        out
    }
}

/// Margin against a bound: `bound − value`, `+∞` when both sides vanish.
fn margin<S: Scalar>(bound: S, value: S) -> S {
    if bound == S::zero() && value == S::zero() {
        S::infinity()
    } else {
        bound - value
    }
}

/// `factor·ρ₀` with `0·∞ = 0`.
fn times_rho0<S: Scalar>(factor: S, rho0: S) -> S {
    if rho0 == S::zero() {
        S::zero()
    } else {
        factor * rho0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRow<S> {
    pub t: S,
    pub rho_mt: S,
    /// `ρ_MT(t)/ρ_MT(0)`, `None` when `ρ_MT(0) = 0`.
    pub ratio: Option<S>,
    /// `C₁(t)`, `None` when the estimate is vacuous at `t`.
    pub c1: Option<S>,
    pub margin: S,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalReport<S> {
    pub rows: Vec<LocalRow<S>>,
    /// Rows skipped because the denominator of `C₁` is not positive.
    pub vacuous: usize,
}

impl<S: Scalar> LocalReport<S> {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }
}

/// `ρ_MT(t) ≤ C₁(t) ρ_MT(0)` for sampled `t < T_max`, up to `1e−6 + allowance`.
pub fn local_bound<S: Scalar>(
    series: &PairSeries<S>,
    constants: &StabilityConstants<S>,
    allowance: S,
) -> LocalReport<S> {
    let rho0 = series.rho0();
    let tol = S::lit(1e-6) + allowance;
    let mut rows = Vec::new();
    let mut vacuous = 0;
    for k in 0..series.len() {
        let (t, rho) = (series.times[k], series.rho_mt[k]);
        if t >= constants.t_max {
            break;
        }
        let ratio = (rho0 > S::zero()).then(|| rho / rho0);
        let c1 = match constants.c1(t) {
            Ok(c) => c,
            Err(_) => {
                vacuous += 1;
                rows.push(LocalRow { t, rho_mt: rho, ratio, c1: None, margin: S::infinity(), violated: false });
                continue;
            }
        };
        let bound = times_rho0(c1, rho0);
        let violated = rho > bound + tol;
        let m = match ratio {
            Some(r) => c1 - r,
            None => margin(bound, rho),
        };
        rows.push(LocalRow { t, rho_mt: rho, ratio, c1: Some(c1), margin: m, violated });
    }
    LocalReport { rows, vacuous }
}

pub fn check_local_bound<S: Scalar>(
    traj1: &Trajectory<S>,
    traj2: &Trajectory<S>,
    grid: &BreakpointGrid<S>,
    constants: &StabilityConstants<S>,
    allowance: S,
) -> Result<LocalReport<S>> {
    Ok(local_bound(&PairSeries::new(traj1, traj2, grid)?, constants, allowance))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearRow<S> {
    pub t: S,
    /// `∫₀ᵗ |v₁ − v₂|`.
    pub v_gap: S,
    /// Bound valid for `t < T_max`; `None` past it or when vacuous.
    pub local_rhs: Option<S>,
    /// Bound valid for `t < T_int`; `None` past it.
    pub corollary_rhs: Option<S>,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearReport<S> {
    pub rows: Vec<NonlinearRow<S>>,
}

impl<S: Scalar> NonlinearReport<S> {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }
}

/// Estimates of `∫₀ᵀ |v₁ − v₂|`: `max(1/min g₁, T)/(1 − Lip g₁/min g₁ · μ(0)(J)) · ρ_MT(0)`
/// for `T < T_max`, where `J = (x_N − max_j G_j(T), x_N)` uses the displacements of the
/// two runs, and `2 max(1/min g₁, T_int) It₁ κ^{It₂} ρ_MT(0)` for `T < T_int`.
pub fn nonlinear_estimate<S: Scalar>(
    series: &PairSeries<S>,
    model: &ModelCoefficients<S>,
    mu_sum: &crate::measure::DiscreteMeasure<S>,
    constants: &StabilityConstants<S>,
    allowance: S,
) -> Result<NonlinearReport<S>> {
    let rho0 = series.rho0();
    let min_g = compute_min_g1(model, constants.tv1 + constants.tv2)?;
    let lip = model.lip_g1();
    let x_n = model.grid().last();
    let g1 = StepIntegral::of_series(series.dt, &series.v1, model.g1());
    let g2 = StepIntegral::of_series(series.dt, &series.v2, model.g1());
    let gaps = series.v_gap();
    let corollary = S::lit(2.0)
        * (S::one() / min_g).max(constants.t_int)
        * S::lit(constants.it1 as f64)
        * constants.kappa.powf(S::lit(constants.it2 as f64));
    let corollary = times_rho0(corollary, rho0);
    let mut rows = Vec::new();
    for k in 1..series.len() {
        let t = series.times[k];
        if t >= constants.t_max && t >= constants.t_int {
            break;
        }
        let local_rhs = if t < constants.t_max {
            let reach = g1.at(t)?.max(g2.at(t)?);
            let denom = S::one() - lip / min_g * mu_sum.mass_in(&open_before(x_n, reach));
            (denom > S::zero()).then(|| times_rho0((S::one() / min_g).max(t) / denom, rho0))
        } else {
            None
        };
        let corollary_rhs = (t < constants.t_int).then_some(corollary);
        let tol = S::lit(1e-9) + allowance;
        let violated = local_rhs.is_some_and(|b| gaps[k] > b + tol) || corollary_rhs.is_some_and(|b| gaps[k] > b + tol);
        rows.push(NonlinearRow { t, v_gap: gaps[k], local_rhs, corollary_rhs, violated });
    }
    Ok(NonlinearReport { rows })
}

pub fn check_nonlinear_estimate<S: Scalar>(
    traj1: &Trajectory<S>,
    traj2: &Trajectory<S>,
    model: &ModelCoefficients<S>,
    constants: &StabilityConstants<S>,
    allowance: S,
) -> Result<NonlinearReport<S>> {
    let series = PairSeries::new(traj1, traj2, model.grid())?;
    let sum = traj1.snapshots[0].add(&traj2.snapshots[0]);
    nonlinear_estimate(&series, model, &sum, constants, allowance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalRow<S> {
    pub t: S,
    pub rho_mt: S,
    pub rho_flat: S,
    /// `e^{α⌈t/β⌉} ρ_MT(0)`.
    pub bound: S,
    pub margin: S,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalReport<S> {
    pub rows: Vec<GlobalRow<S>>,
}

impl<S: Scalar> GlobalReport<S> {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }

    pub fn min_margin(&self) -> S {
        self.rows.iter().map(|r| r.margin).fold(S::infinity(), S::min)
    }
}

/// `ρ_MT(t) ≤ e^{α⌈t/β⌉} ρ_MT(0) + allowance` at every sample.
pub fn global_bound<S: Scalar>(
    series: &PairSeries<S>,
    constants: &StabilityConstants<S>,
    allowance: S,
) -> GlobalReport<S> {
    let rho0 = series.rho0();
    let tol = S::lit(1e-9) + allowance;
    let rows = (0..series.len())
        .map(|k| {
            let (t, rho) = (series.times[k], series.rho_mt[k]);
            let bound = times_rho0(constants.growth_factor(t), rho0);
            GlobalRow {
                t,
                rho_mt: rho,
                rho_flat: series.rho_flat[k],
                bound,
                margin: margin(bound, rho),
                violated: rho > bound + tol,
            }
        })
        .collect();
    GlobalReport { rows }
}

pub fn check_global_bound<S: Scalar>(
    traj1: &Trajectory<S>,
    traj2: &Trajectory<S>,
    grid: &BreakpointGrid<S>,
    constants: &StabilityConstants<S>,
    allowance: S,
) -> Result<GlobalReport<S>> {
    Ok(global_bound(&PairSeries::new(traj1, traj2, grid)?, constants, allowance))
}

#[cfg(test)]
mod tests {
    use super::super::compute_global_constants;
    use super::*;
    use crate::dynamics::simulate;
    use crate::measure::DiscreteMeasure;

    #[test]
    fn identical_pair_has_infinite_margin() {
        let grid = BreakpointGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let model = ModelCoefficients::<f64>::constant(grid.clone(), 1.0, &[0.5, 1.0]).unwrap();
        let m = DiscreteMeasure::new([(0.3, 1.0), (1.0, 0.5)]).unwrap();
        let tr = simulate(&m, &model, 1.5, 0.01, 1).unwrap();
        let k = compute_global_constants(&model, &m, &m).unwrap();
        let g = check_global_bound(&tr, &tr, &grid, &k, 0.0).unwrap();
        assert_eq!(g.violations(), 0);
        assert!(g.min_margin().is_infinite());
        let l = check_local_bound(&tr, &tr, &grid, &k, 0.0).unwrap();
        assert_eq!(l.violations(), 0);
        assert!(l.rows.iter().all(|r| r.t < 1.0));
        let n = check_nonlinear_estimate(&tr, &tr, &model, &k, 0.0).unwrap();
        assert!(n.rows.iter().all(|r| r.v_gap == 0.0 && !r.violated));
    }

    #[test]
    fn perturbed_pair_within_bounds() {
        let grid = BreakpointGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let model = ModelCoefficients::constant(grid.clone(), 1.0, &[0.0, 1.0]).unwrap();
        let (a, b) = (DiscreteMeasure::dirac(1.0), DiscreteMeasure::dirac(0.9));
        let (ta, tb) = (simulate(&a, &model, 0.9, 0.001, 4).unwrap(), simulate(&b, &model, 0.9, 0.001, 4).unwrap());
        let k = compute_global_constants(&model, &a, &b).unwrap();
        let allowance = 0.01;
        assert_eq!(check_local_bound(&ta, &tb, &grid, &k, allowance).unwrap().violations(), 0);
        assert_eq!(check_global_bound(&ta, &tb, &grid, &k, allowance).unwrap().violations(), 0);
    }

    #[test]
    fn mismatched_steps_rejected() {
        let grid = BreakpointGrid::new(vec![0.0, 1.0]).unwrap();
        let model = ModelCoefficients::constant(grid.clone(), 1.0, &[0.0]).unwrap();
        let m = DiscreteMeasure::dirac(0.5);
        let (a, b) = (simulate(&m, &model, 0.2, 0.1, 1).unwrap(), simulate(&m, &model, 0.2, 0.05, 1).unwrap());
        assert!(PairSeries::new(&a, &b, &grid).is_err());
    }
}
