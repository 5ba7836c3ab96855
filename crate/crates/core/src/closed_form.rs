//! Exact solutions of three small configurations, used as ground truth.
//!
//! * [`eval_example_1_1`]: a frozen atom at `x₁` against one placed `ε` to its right,
//!   with unit speed and no outflow.
//! * [`eval_example_4_5`]: an atom at `x₁` releasing mass at a constant rate against
//!   one starting `ε` to its left.
//! * [`eval_example_4_6`]: two atoms per solution where the speed depends on whether
//!   mass already sits at `x_N`.

use crate::dynamics::{ModelCoefficients, PiecewiseLinearFn};
use crate::error::{Error, Result};
use crate::grid::BreakpointGrid;
use crate::measure::DiscreteMeasure;
use crate::scalar::Scalar;

/// Width of the linear ramp replacing the jump of `g₁` between `v = 0` and `v = 1`.
pub const SPEED_RAMP_WIDTH: f64 = 1e-6;

/// Parameters of one of the reference solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticSolution<S> {
    /// `(δ_{x₁}, δ_{x₁+ε+t})`.
    FreeAtom { eps: S },
    /// Constant outflow from `x₁` at rate `c1`, density resolved by `m` atoms.
    ConstantOutflow { eps: S, c1: S, m: usize },
    /// Speed `g_low` while `x_N` is empty and `1` once it holds unit mass.
    TwoAtomSpeedCoupled { eps: S, g_low: S, y: S },
}

impl<S: Scalar> AnalyticSolution<S> {
    pub fn eval(&self, t: S, grid: &BreakpointGrid<S>) -> Result<(DiscreteMeasure<S>, DiscreteMeasure<S>)> {
        match *self {
            AnalyticSolution::FreeAtom { eps } => eval_example_1_1(t, eps, grid),
            AnalyticSolution::ConstantOutflow { eps, c1, m } => eval_example_4_5(t, eps, c1, m, grid),
            AnalyticSolution::TwoAtomSpeedCoupled { eps, g_low, y } => eval_example_4_6(t, eps, g_low, y, grid),
        }
    }

    /// Coefficients under which both measures of the pair solve the system.
    pub fn model(&self, grid: &BreakpointGrid<S>) -> Result<ModelCoefficients<S>> {
        let n = grid.last_index();
        let mut rates = vec![S::zero(); n];
        match *self {
            AnalyticSolution::FreeAtom { .. } => ModelCoefficients::constant(grid.clone(), S::one(), &rates),
            AnalyticSolution::ConstantOutflow { c1, .. } => {
                second_point(grid)?;
                rates[1] = c1;
                ModelCoefficients::constant(grid.clone(), S::one(), &rates)
            }
            AnalyticSolution::TwoAtomSpeedCoupled { g_low, .. } => {
                let g1 = PiecewiseLinearFn::from_pairs(&[(S::zero(), g_low), (S::lit(SPEED_RAMP_WIDTH), S::one())])?;
                let mut c: Vec<_> = rates.into_iter().map(PiecewiseLinearFn::constant).collect();
                c.push(PiecewiseLinearFn::constant(S::zero()));
                ModelCoefficients::new(grid.clone(), g1, PiecewiseLinearFn::constant(S::zero()), Vec::new(), c)
            }
        }
    }

    /// Pair at time zero.
    pub fn initial(&self, grid: &BreakpointGrid<S>) -> Result<(DiscreteMeasure<S>, DiscreteMeasure<S>)> {
        self.eval(S::zero(), grid)
    }
}

fn out_of_range(msg: String) -> Error {
    Error::ExampleOutOfRange(msg)
}

fn second_point<S: Scalar>(grid: &BreakpointGrid<S>) -> Result<(S, S, S)> {
    if grid.last_index() < 2 {
        return Err(Error::InvalidGrid("need breakpoints x_0 < x_1 < x_2".into()));
    }
    Ok((grid.point(0), grid.point(1), grid.point(2)))
}

/// `(δ_{x₁}, δ_{x₁+ε+t})` for unit speed and no outflow.
pub fn eval_example_1_1<S: Scalar>(
    t: S,
    eps: S,
    grid: &BreakpointGrid<S>,
) -> Result<(DiscreteMeasure<S>, DiscreteMeasure<S>)> {
    let (_, x1, x2) = second_point(grid)?;
    if t < S::zero() || eps <= S::zero() || x1 + eps + t >= x2 {
        return Err(out_of_range(format!("need t >= 0, eps > 0 and x1 + eps + t < x2; got t = {t}, eps = {eps}")));
    }
    Ok((DiscreteMeasure::dirac(x1), DiscreteMeasure::dirac(x1 + eps + t)))
}

/// Mass released from a unit atom at `x` over `age` at rate `c` and transported with unit
/// speed: `c e^{−c(age − (z − x))}` on `[x, x + age]`, as `m` cell-midpoint atoms each
/// holding the exact cell mass. The atom at `x` keeps `e^{−c·age}`.
fn outflow_state<S: Scalar>(x: S, age: S, c: S, m: usize) -> DiscreteMeasure<S> {
    if age <= S::zero() || c == S::zero() {
        return DiscreteMeasure::dirac(x);
    }
    let m = m.max(1);
    let h = age / S::lit(m as f64);
    let mut atoms = Vec::with_capacity(m + 1);
    atoms.push((x, (-c * age).exp()));
    for j in 0..m {
        // cell [a, b] measured from x; mass emitted between ages age − b and age − a
        let a = h * S::lit(j as f64);
        let mass = (-c * (age - a - h)).exp() * -(-c * h).exp_m1();
        atoms.push((x + a + h / S::lit(2.0), mass));
    }
    DiscreteMeasure::new(atoms).expect("outflow atoms are finite and non-negative")
}

/// `(μ(t), μ^ε(t))` for `μ(0) = δ_{x₁}`, `μ^ε(0) = δ_{x₁−ε}`, unit speed and constant rate
/// `c1` at `x₁`. The perturbed atom reaches `x₁` at `t = ε` and releases mass from then on.
pub fn eval_example_4_5<S: Scalar>(
    t: S,
    eps: S,
    c1: S,
    m: usize,
    grid: &BreakpointGrid<S>,
) -> Result<(DiscreteMeasure<S>, DiscreteMeasure<S>)> {
    let (x0, x1, x2) = second_point(grid)?;
    if t < S::zero() || eps <= S::zero() || c1 < S::zero() {
        return Err(out_of_range(format!("need t >= 0, eps > 0, c1 >= 0; got t = {t}, eps = {eps}, c1 = {c1}")));
    }
    if x1 - eps <= x0 || x1 + t >= x2 {
        return Err(out_of_range(format!("need x0 < x1 - eps and x1 + t < x2; got t = {t}, eps = {eps}")));
    }
    let base = outflow_state(x1, t, c1, m);
    let perturbed = if t < eps { DiscreteMeasure::dirac(x1 - eps + t) } else { outflow_state(x1, t - eps, c1, m) };
    Ok((base, perturbed))
}

/// `(μ(t), μ^ε(t))` for `μ(0) = δ_{x_N} + δ_y` and `μ^ε(0) = δ_{x_N−ε} + δ_y`, speed
/// `g_low` while `x_N` is empty and `1` otherwise. The perturbed atom reaches `x_N` at
/// `t̄ = ε/g_low`.
pub fn eval_example_4_6<S: Scalar>(
    t: S,
    eps: S,
    g_low: S,
    y: S,
    grid: &BreakpointGrid<S>,
) -> Result<(DiscreteMeasure<S>, DiscreteMeasure<S>)> {
    let n = grid.last_index();
    let (xm, xn) = (grid.point(n - 1), grid.point(n));
    if !(g_low > S::zero() && g_low <= S::one()) || eps <= S::zero() || t < S::zero() {
        return Err(out_of_range(format!("need 0 < g_low <= 1, eps > 0, t >= 0; got g_low = {g_low}, eps = {eps}")));
    }
    if !(y > xm && y < xn) || xn - eps <= xm {
        return Err(out_of_range(format!("need x_(N-1) < y < x_N and x_N - eps > x_(N-1); got y = {y}")));
    }
    let t_bar = eps / g_low;
    let arrived = t > t_bar;
    let moved = if arrived { eps + (t - t_bar) } else { g_low * t };
    if y + t.max(moved) >= xn {
        return Err(out_of_range(format!("the free atom from y = {y} reaches x_N before t = {t}")));
    }
    let base = DiscreteMeasure::new([(xn, S::one()), (y + t, S::one())])?;
    let lead = if arrived { xn } else { xn - eps + g_low * t };
    let perturbed = DiscreteMeasure::new([(lead, S::one()), (y + moved, S::one())])?;
    Ok((base, perturbed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{flat_metric, mt_metric};

    fn grid() -> BreakpointGrid<f64> {
        BreakpointGrid::new(vec![0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn free_atom() {
        let g = grid();
        let (a, b) = eval_example_1_1(0.0, 0.1, &g).unwrap();
        assert!((flat_metric(&a, &b) - 0.1).abs() < 1e-12);
        assert!((mt_metric(&a, &b, &g) - 2.0).abs() < 1e-12);
        let (a, b) = eval_example_1_1(0.5, 0.1, &g).unwrap();
        assert!((flat_metric(&a, &b) - 0.6).abs() < 1e-12);
        assert!(eval_example_1_1(0.95, 0.1, &g).is_err());
    }

    #[test]
    fn constant_outflow() {
        let g = grid();
        let (eps, c1) = (0.2, 1.0);
        let (a, b) = eval_example_4_5(0.0, eps, c1, 50, &g).unwrap();
        assert!((mt_metric(&a, &b, &g) - eps).abs() < 1e-12);
        let (a, b) = eval_example_4_5(eps, eps, c1, 2000, &g).unwrap();
        assert!((a.total_variation() - 1.0).abs() < 1e-14);
        assert!((a.mass_at(1.0) - (-c1 * eps).exp()).abs() < 1e-15);
        let expected = 2.0 * (1.0 - (-c1 * eps).exp());
        assert!((mt_metric(&a, &b, &g) - expected).abs() < 1e-3 * expected);
        let (a, _) = eval_example_4_5(0.3, eps, 0.0, 10, &g).unwrap();
        assert_eq!(a, DiscreteMeasure::dirac(1.0));
    }

    #[test]
    fn outflow_refines() {
        let coarse = outflow_state(1.0, 0.2, 1.0, 100);
        let fine = outflow_state(1.0, 0.2, 1.0, 200);
        let finer = outflow_state(1.0, 0.2, 1.0, 400);
        let (d1, d2) = (flat_metric(&coarse, &finer), flat_metric(&fine, &finer));
        assert!(d2 < d1 && d1 < 1e-3, "{d1} {d2}");
    }

    #[test]
    fn speed_coupled_pair() {
        let g = BreakpointGrid::new(vec![0.0, 1.0, 3.0]).unwrap();
        let (eps, g_low, y): (f64, f64, f64) = (0.05, 0.5, 1.5);
        let (a, b) = eval_example_4_6(0.0, eps, g_low, y, &g).unwrap();
        assert!((mt_metric(&a, &b, &g) - eps).abs() < 1e-12);
        let (a, b) = eval_example_4_6(eps / g_low, eps, g_low, y, &g).unwrap();
        assert!((mt_metric(&a, &b, &g) - eps * (1.0 / g_low - 1.0)).abs() < 1e-12);
        let (a, b) = eval_example_4_6(eps, eps, 1.0, y, &g).unwrap();
        assert!(mt_metric(&a, &b, &g) < 1e-12);
    }
}
