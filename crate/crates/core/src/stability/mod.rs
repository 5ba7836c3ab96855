//! Explicit constants of the stability estimates and checks of those estimates on
//! pairs of simulated trajectories. Everything here assumes `p ≡ 0`.

mod appendix;
mod checks;

pub use appendix::{check_appendix_inequalities, check_tau_bound, AppendixReport, InequalityCheck};
pub use checks::{
    check_global_bound, check_local_bound, check_nonlinear_estimate, global_bound, local_bound, nonlinear_estimate,
    GlobalReport, GlobalRow, LocalReport, LocalRow, NonlinearReport, NonlinearRow, PairSeries,
};

use serde::Serialize;

use crate::dynamics::ModelCoefficients;
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, Interval};
use crate::scalar::Scalar;

/// Constants of the local and global estimates for one pair of initial data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityConstants<S> {
    pub t_max: S,
    pub t_int: S,
    pub t_intmin: S,
    /// Mass threshold `¼ min g₁ / Lip g₁`; infinite for constant `g₁`.
    pub l: S,
    pub it1: u64,
    pub it2: u64,
    pub kappa: S,
    pub alpha: S,
    pub beta: S,
    pub min_g1: S,
    pub sup_g1: S,
    pub sup_c: S,
    pub lip_g1: S,
    pub lip_c: S,
    pub tv1: S,
    pub tv2: S,
    #[serde(skip)]
    initial_sum: DiscreteMeasure<S>,
    #[serde(skip)]
    x_n: S,
}

impl<S: Scalar> StabilityConstants<S> {
    /// `C₁(T)` for the pair the constants were computed from.
    pub fn c1(&self, t: S) -> Result<S> {
        c1_expression(
            t,
            self.t_max,
            &Lipschitz {
                sup_c: self.sup_c,
                lip_c: self.lip_c,
                lip_g: self.lip_g1,
                sup_g: self.sup_g1,
                min_g: self.min_g1,
            },
            self.tv1.max(self.tv2),
            &self.initial_sum,
            self.x_n,
        )
    }

    /// `e^{α⌈t/β⌉}`.
    pub fn growth_factor(&self, t: S) -> S {
        (self.alpha * (t / self.beta).ceil()).exp()
    }

    /// `Lip g₁ = 0`: the mass threshold is void and the iteration uses fixed steps.
    pub fn fixed_step(&self) -> bool {
        self.l.is_infinite()
    }
}

/// `T_max = min_i |x_i − x_{i−1}| / sup g₁`.
pub fn compute_tmax<S: Scalar>(model: &ModelCoefficients<S>) -> S {
    model.t_max()
}

/// Infimum of `g₁` over `v ∈ [0, tv_bound]`.
pub fn compute_min_g1<S: Scalar>(model: &ModelCoefficients<S>, tv_bound: S) -> Result<S> {
    let m = model.g1().inf_on(S::zero(), tv_bound.max(S::zero()));
    if m <= S::zero() {
        return Err(Error::NonPositiveSpeed(m.as_f64()));
    }
    Ok(m)
}

#[derive(Clone, Copy)]
struct Lipschitz<S> {
    sup_c: S,
    lip_c: S,
    lip_g: S,
    sup_g: S,
    min_g: S,
}

impl<S: Scalar> Lipschitz<S> {
    fn of(model: &ModelCoefficients<S>, min_g: S) -> Self {
        Self { sup_c: model.sup_c(), lip_c: model.lip_c(), lip_g: model.lip_g1(), sup_g: model.sup_g1(), min_g }
    }

    /// `max(1, sup c / min g (2 + T sup c)) + {…}·tv·max(1/min g, T)` without the denominator.
    fn brace(&self, t: S) -> (S, S) {
        let two = S::lit(2.0);
        let Self { sup_c: sc, lip_c: lc, lip_g: lg, min_g: mg, .. } = *self;
        let lead = S::one().max(sc / mg * (two + t * sc));
        let brace = lg + two * sc * lg / mg + two * lc + t * sc * (sc * lg / mg + lc + lg);
        (lead, brace)
    }
}

fn c1_expression<S: Scalar>(
    t: S,
    t_max: S,
    k: &Lipschitz<S>,
    tv: S,
    initial_sum: &DiscreteMeasure<S>,
    x_n: S,
) -> Result<S> {
    if !(t >= S::zero()) {
        return Err(Error::InvalidStep(format!("C1 needs T >= 0, got {t}")));
    }
    if t >= t_max {
        return Err(Error::HorizonExceeded { t: t.as_f64(), t_max: t_max.as_f64() });
    }
    let (lead, brace) = k.brace(t);
    let j_mass = initial_sum.mass_in(&open_before(x_n, k.sup_g * t));
    let denom = S::one() - k.lip_g / k.min_g * j_mass;
    if denom <= S::zero() {
        return Err(Error::DenominatorNonpositive(denom.as_f64()));
    }
    Ok(lead + brace * tv * (S::one() / k.min_g).max(t) / denom)
}

/// `(x − len, x)`, empty when `len = 0`.
fn open_before<S: Scalar>(x: S, len: S) -> Interval<S> {
    Interval { lower: x - len, upper: x, lower_closed: false, upper_closed: false }
}

/// `C₁(T)` of the local estimate, with `μ_j(0)(J_max)` over-approximated through
/// `G_j(T) ≤ sup g₁·T`. The mass factor uses `max(TV(μ₁(0)), TV(μ₂(0)))`, which makes
/// the constant symmetric in the pair.
pub fn compute_c1<S: Scalar>(
    t: S,
    model: &ModelCoefficients<S>,
    mu1: &DiscreteMeasure<S>,
    mu2: &DiscreteMeasure<S>,
) -> Result<S> {
    let (tv1, tv2) = (mu1.total_variation(), mu2.total_variation());
    let min_g = compute_min_g1(model, tv1 + tv2)?;
    c1_expression(t, model.t_max(), &Lipschitz::of(model, min_g), tv1.max(tv2), &mu1.add(mu2), model.grid().last())
}

/// Allowance `C·dt` added to the bounds when checking simulated trajectories, with
/// `C = (sup g₁ + sup c)·(TV(μ₁(0)) + TV(μ₂(0)))`: the mass that can be misplaced by
/// one step of the scheme.
pub fn discretization_allowance<S: Scalar>(model: &ModelCoefficients<S>, tv_sum: S, dt: S) -> S {
    (model.sup_g1() + model.sup_c()) * tv_sum * dt
}

fn ceil_u64<S: Scalar>(x: S) -> u64 {
    if x.is_finite() {
        x.ceil().max(S::zero()).to_u64().unwrap_or(u64::MAX)
    } else {
        u64::MAX
    }
}

/// Constants of the global estimate `ρ_MT(t) ≤ e^{α⌈t/β⌉} ρ_MT(0)`.
pub fn compute_global_constants<S: Scalar>(
    model: &ModelCoefficients<S>,
    mu1: &DiscreteMeasure<S>,
    mu2: &DiscreteMeasure<S>,
) -> Result<StabilityConstants<S>> {
    let grid = model.grid();
    let n = grid.last_index();
    let (tv1, tv2) = (mu1.total_variation(), mu2.total_variation());
    let min_g1 = compute_min_g1(model, tv1 + tv2)?;
    let k = Lipschitz::of(model, min_g1);
    let last_gap = grid.point(n) - grid.point(n - 1);
    let t_max = model.t_max();
    let t_int = last_gap / k.sup_g;
    let t_intmin = last_gap / min_g1;
    let l = if k.lip_g > S::zero() { S::lit(0.25) * min_g1 / k.lip_g } else { S::infinity() };
    let step = S::one().min(t_max);
    let near_end =
        Interval { lower: grid.point(n - 1), upper: grid.point(n), lower_closed: false, upper_closed: false };
    let last_cell_mass = mu1.mass_in(&near_end) + mu2.mass_in(&near_end);
    let it1 = ceil_u64(t_intmin / step) + ceil_u64(last_cell_mass / l) + 1;
    let it2 = ceil_u64(last_gap / (min_g1 * step)) + ceil_u64((tv1 + tv2) / l) + 2;
    let (lead, brace) = k.brace(S::one());
    let kappa = lead + S::lit(2.0) * brace * tv1.max(tv2) * (S::one() / min_g1).max(S::one());
    let alpha = S::lit(it2 as f64) * kappa.ln();
    Ok(StabilityConstants {
        t_max,
        t_int,
        t_intmin,
        l,
        it1,
        it2,
        kappa,
        alpha,
        beta: t_int,
        min_g1,
        sup_g1: k.sup_g,
        sup_c: k.sup_c,
        lip_g1: k.lip_g,
        lip_c: k.lip_c,
        tv1,
        tv2,
        initial_sum: mu1.add(mu2),
        x_n: grid.last(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PiecewiseLinearFn;
    use crate::grid::BreakpointGrid;

    fn model(points: Vec<f64>, g1: PiecewiseLinearFn<f64>, rates: Vec<f64>) -> ModelCoefficients<f64> {
        let grid = BreakpointGrid::new(points).unwrap();
        let mut c: Vec<_> = rates.into_iter().map(PiecewiseLinearFn::constant).collect();
        c.push(PiecewiseLinearFn::constant(0.0));
        ModelCoefficients::new(grid, g1, PiecewiseLinearFn::constant(0.0), vec![], c).unwrap()
    }

    #[test]
    fn t_max_cases() {
        let one = PiecewiseLinearFn::constant(1.0);
        assert_eq!(compute_tmax(&model(vec![0.0, 1.0, 2.0], one, vec![0.0, 0.0])), 1.0);
        let two = PiecewiseLinearFn::constant(2.0);
        assert_eq!(compute_tmax(&model(vec![0.0, 1.0, 3.0], two, vec![0.0, 0.0])), 0.5);
        let ramp = PiecewiseLinearFn::from_pairs(&[(0.0, 1.0), (1.0, 4.0)]).unwrap();
        assert_eq!(compute_tmax(&model(vec![0.0, 0.5, 2.0], ramp, vec![0.0, 0.0])), 0.125);
    }

    #[test]
    fn min_g1_cases() {
        let pts = vec![0.0, 1.0, 2.0];
        assert_eq!(
            compute_min_g1(&model(pts.clone(), PiecewiseLinearFn::constant(1.0), vec![0.0, 0.0]), 2.0).unwrap(),
            1.0
        );
        let inc = PiecewiseLinearFn::from_pairs(&[(0.0, 1.0), (10.0, 11.0)]).unwrap();
        assert_eq!(compute_min_g1(&model(pts.clone(), inc, vec![0.0, 0.0]), 2.0).unwrap(), 1.0);
        let dip = PiecewiseLinearFn::from_pairs(&[(0.0, 2.0), (1.0, 0.5), (3.0, 3.0)]).unwrap();
        assert_eq!(compute_min_g1(&model(pts, dip, vec![0.0, 0.0]), 3.0).unwrap(), 0.5);
    }

    #[test]
    fn c1_cases() {
        let d = DiscreteMeasure::dirac(1.0);
        let m = model(vec![0.0, 1.0, 2.0], PiecewiseLinearFn::constant(1.0), vec![0.0, 0.0]);
        assert_eq!(compute_c1(0.5, &m, &d, &d).unwrap(), 1.0);
        let c = 1.5;
        let m = model(vec![0.0, 1.0, 2.0], PiecewiseLinearFn::constant(1.0), vec![0.0, c]);
        let small = compute_c1(1e-9, &m, &d, &d).unwrap();
        assert!(small >= (2.0 * c).max(1.0));
        assert!((small - 2.0 * c).abs() < 1e-6);
        assert!(matches!(compute_c1(1.0, &m, &d, &d), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn c1_denominator_guard() {
        // steep speed with mass right below x_N makes the estimate vacuous
        let g1 = PiecewiseLinearFn::from_pairs(&[(0.0, 1.0), (1.0, 5.0)]).unwrap();
        let m = model(vec![0.0, 1.0, 2.0], g1, vec![0.0, 0.0]);
        let d = DiscreteMeasure::dirac(1.95);
        assert!(matches!(compute_c1(0.1, &m, &d, &d), Err(Error::DenominatorNonpositive(_))));
        assert!(compute_c1(0.001, &m, &d, &d).is_ok());
    }

    #[test]
    fn global_constants_constant_speed() {
        let m = model(vec![0.0, 1.0, 2.0], PiecewiseLinearFn::constant(1.0), vec![0.0, 0.0]);
        let d = DiscreteMeasure::dirac(0.5);
        let k = compute_global_constants(&m, &d, &d).unwrap();
        assert_eq!((k.t_int, k.t_max), (1.0, 1.0));
        assert!(k.fixed_step());
        assert_eq!(k.kappa, 1.0);
        assert_eq!(k.it2, 3);
        assert_eq!(k.growth_factor(0.5), 1.0);
    }

    #[test]
    fn global_constants_mass_threshold() {
        let g1 = PiecewiseLinearFn::from_pairs(&[(0.0, 2.0), (1.0, 3.0)]).unwrap();
        let m = model(vec![0.0, 1.0, 2.0], g1, vec![0.5, 0.0]);
        let d = DiscreteMeasure::dirac(0.5);
        let k = compute_global_constants(&m, &d, &d).unwrap();
        assert_eq!(k.l, 0.5);
        assert!(k.kappa >= 1.0);
        assert_eq!(k.beta, k.t_int);
        assert!((k.alpha - k.it2 as f64 * k.kappa.ln()).abs() < 1e-12);
    }

    #[test]
    fn doubling_rates_doubles_linear_terms() {
        let g1 = PiecewiseLinearFn::from_pairs(&[(0.0, 1.0), (2.0, 1.5)]).unwrap();
        let m = model(vec![0.0, 1.0, 2.0], g1, vec![0.4, 0.7]);
        let d = DiscreteMeasure::dirac(0.5);
        let base = compute_c1(0.3, &m, &d, &d).unwrap();
        let doubled = compute_c1(0.3, &m.with_scaled_rates(2.0), &d, &d).unwrap();
        assert!(doubled >= 2.0 * (base - 1.0));
    }
}
