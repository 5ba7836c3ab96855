//! Characteristics of the transport field `ẋ = 1_{x ∉ grid} g₁(v(t))`, branching
//! measures at the breakpoints and the superposition formula built from them.
//!
//! `v` is known only through samples `v_k = v(k·dt)` and is taken piecewise constant,
//! `v(s) = v_k` on `[k·dt, (k+1)·dt)`, which is how the simulator advances it.

use super::model::ModelCoefficients;
use super::pwl::PiecewiseLinearFn;
use crate::error::{Error, Result};
use crate::grid::BreakpointGrid;
use crate::measure::DiscreteMeasure;
use crate::scalar::{same_position, Scalar};

/// Running integral of a piecewise-constant rate on a uniform step.
#[derive(Debug, Clone)]
pub struct StepIntegral<S> {
    dt: S,
    rates: Vec<S>,
    /// `cumulative[k] = ∫₀^{k·dt}`
    cumulative: Vec<S>,
}

impl<S: Scalar> StepIntegral<S> {
    pub fn new(dt: S, rates: Vec<S>) -> Self {
        let mut cumulative = Vec::with_capacity(rates.len() + 1);
        let mut acc = S::zero();
        cumulative.push(acc);
        for &r in &rates {
            acc = acc + r * dt;
            cumulative.push(acc);
        }
        Self { dt, rates, cumulative }
    }

    /// `f(v_k)` for every sample.
    pub fn of_series(dt: S, v_series: &[S], f: &PiecewiseLinearFn<S>) -> Self {
        Self::new(dt, v_series.iter().map(|&v| f.eval(v)).collect())
    }

    /// Right end of the covered range.
    pub fn end(&self) -> S {
        self.dt * S::lit(self.rates.len() as f64)
    }

    fn slack(&self) -> S {
        S::lit(1e-9) * self.dt
    }

    pub fn at(&self, t: S) -> Result<S> {
        let end = self.end();
        if !(t >= -self.slack() && t <= end + self.slack()) {
            return Err(Error::OutOfRange { t: t.as_f64(), end: end.as_f64() });
        }
        let t = t.max(S::zero()).min(end);
        let k = (t / self.dt).floor().to_usize().unwrap_or(0).min(self.rates.len().saturating_sub(1));
        if self.rates.is_empty() {
            return Ok(S::zero());
        }
        Ok(self.cumulative[k] + self.rates[k] * (t - self.dt * S::lit(k as f64)))
    }

    /// `∫_a^b`.
    pub fn between(&self, a: S, b: S) -> Result<S> {
        Ok(self.at(b)? - self.at(a)?)
    }

    /// Smallest `t` with `∫₀ᵗ ≥ d − slack`, assuming non-negative rates.
    pub fn first_reaching(&self, d: S, slack: S) -> Option<S> {
        if d <= slack {
            return Some(S::zero());
        }
        let k = self.cumulative.partition_point(|&c| c < d - slack);
        if k == self.cumulative.len() {
            return None;
        }
        let start = self.dt * S::lit((k - 1) as f64);
        let rate = self.rates[k - 1];
        let into = if rate > S::zero() { ((d - self.cumulative[k - 1]) / rate).min(self.dt) } else { self.dt };
        Some(start + into.max(S::zero()))
    }
}

/// Displacement `G(t) = ∫₀ᵗ g₁(v(s)) ds`.
pub type Displacement<S> = StepIntegral<S>;

/// `G(t)` by left-endpoint quadrature of the sampled `v`.
pub fn accumulate_g<S: Scalar>(v_series: &[S], dt: S, g1: &PiecewiseLinearFn<S>, t: S) -> Result<S> {
    StepIntegral::of_series(dt, v_series, g1).at(t)
}

/// First time `x_b + G(t)` hits the grid, `+∞` if not within the sampled range.
pub fn hitting_time_tau<S: Scalar>(x_b: S, g: &Displacement<S>, grid: &BreakpointGrid<S>) -> S {
    let Some((_, p)) = grid.next_at_or_above(x_b) else { return S::infinity() };
    if same_position(x_b, p) {
        return S::zero();
    }
    let slack = S::position_rel_tol() * S::one().max(p.abs());
    g.first_reaching(p - x_b, slack).unwrap_or(S::infinity())
}

/// `X(x_b, 0, r, t)`: transport until `τ(x_b)`, wait at the breakpoint until `r`, then
/// transport again with displacement `G(t) − G(r)`.
pub fn characteristic_x<S: Scalar>(x_b: S, r: S, t: S, g: &Displacement<S>, grid: &BreakpointGrid<S>) -> Result<S> {
    let tau = hitting_time_tau(x_b, g, grid);
    if t <= tau {
        return Ok(x_b + g.at(t)?);
    }
    if r < tau - g.slack() {
        return Err(Error::BranchBeforeArrival { r: r.as_f64(), tau: tau.as_f64() });
    }
    let stop = grid.next_at_or_above(x_b).map(|p| p.1).expect("finite τ implies a breakpoint above");
    if t <= r {
        Ok(stop)
    } else {
        Ok(stop + g.between(r, t)?)
    }
}

/// Distribution of branching times `r ∈ [0, T]` of mass starting at `x_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingMeasure<S> {
    pub tau: S,
    /// Index `λ` of the breakpoint the mass waits at, when it can leave it before `T`.
    pub lambda: Option<usize>,
    /// Mass of the atom at `r = T`.
    pub stay_weight: S,
    /// Outflow times with their masses.
    pub flow: Vec<(S, S)>,
}

impl<S: Scalar> BranchingMeasure<S> {
    pub fn flow_mass(&self) -> S {
        self.flow.iter().map(|a| a.1).sum()
    }

    pub fn total(&self) -> S {
        self.stay_weight + self.flow_mass()
    }
}

/// `λ` with `x_{λ−1} < x_b ≤ x_λ`, restricted to breakpoints that release mass; `x₀`
/// itself releases at rate `c₀`.
fn releasing_breakpoint<S: Scalar>(x_b: S, grid: &BreakpointGrid<S>) -> Option<usize> {
    if grid.index_of(x_b) == Some(0) {
        return Some(0);
    }
    let cell = grid.cell_of(x_b);
    (1..grid.last_index()).contains(&cell).then_some(cell)
}

/// `η_{x_b}` on `[0, t_end]`: an atom `e^{−∫_τ^T c_λ}` at `r = T` plus the outflow
/// density `c_λ(v(r)) e^{−∫_τ^r c_λ}` on `[τ, T]`, split into `quad_steps` cells. Each
/// cell carries its exact mass at its midpoint, so the total is one up to rounding.
pub fn branching_eta<S: Scalar>(
    x_b: S,
    model: &ModelCoefficients<S>,
    v_series: &[S],
    dt: S,
    t_end: S,
    quad_steps: usize,
) -> Result<BranchingMeasure<S>> {
    let grid = model.grid();
    let g = StepIntegral::of_series(dt, v_series, model.g1());
    let tau = hitting_time_tau(x_b, &g, grid);
    let lambda = releasing_breakpoint(x_b, grid);
    let Some(l) = lambda.filter(|_| tau <= t_end) else {
        return Ok(BranchingMeasure { tau, lambda: None, stay_weight: S::one(), flow: Vec::new() });
    };
    let rate = StepIntegral::of_series(dt, v_series, model.c(l));
    let q = quad_steps.max(1);
    let width = (t_end - tau) / S::lit(q as f64);
    let mut flow = Vec::with_capacity(q);
    let mut survive = S::one();
    let mut spent = S::zero();
    for j in 0..q {
        let a = tau + width * S::lit(j as f64);
        let b = if j + 1 == q { t_end } else { tau + width * S::lit((j + 1) as f64) };
        let step = rate.between(a, b)?;
        let released = survive * -(-step).exp_m1();
        flow.push((a + (b - a) / S::lit(2.0), released));
        spent = spent + step;
        survive = survive - released;
    }
    let stay_weight = (-spent).exp();
    Ok(BranchingMeasure { tau, lambda, stay_weight, flow })
}

/// `∫φ dμ(T)` through characteristics weighted by `η_{x_b}` and, when `p ≠ 0`, by
/// `exp ∫₀ᵀ p₁(v(s)) p₂(X(x_b,0,r,s)) ds`.
pub fn superposition_eval<S: Scalar>(
    m0: &DiscreteMeasure<S>,
    phi: impl Fn(S) -> S,
    model: &ModelCoefficients<S>,
    v_series: &[S],
    dt: S,
    t_end: S,
    quad_steps: usize,
) -> Result<S> {
    let t_max = model.t_max();
    if t_end >= t_max {
        return Err(Error::HorizonExceeded { t: t_end.as_f64(), t_max: t_max.as_f64() });
    }
    let grid = model.grid();
    let g = StepIntegral::of_series(dt, v_series, model.g1());
    let growth = model.has_growth().then(|| StepIntegral::of_series(dt, v_series, model.p1()));
    let mut total = S::zero();
    for &(x_b, w) in m0.atoms() {
        let eta = branching_eta(x_b, model, v_series, dt, t_end, quad_steps)?;
        for (r, weight) in std::iter::once((t_end, eta.stay_weight)).chain(eta.flow.iter().copied()) {
            let mut term = phi(characteristic_x(x_b, r, t_end, &g, grid)?) * weight;
            if let Some(p1) = &growth {
                term = term * growth_exponent(x_b, r, t_end, dt, &g, p1, model)?.exp();
            }
            total = total + term * w;
        }
    }
    Ok(total)
}

/// Midpoint quadrature of `∫₀ᵀ p₁(v(s)) p₂(X(s)) ds`, eight nodes per sample step.
fn growth_exponent<S: Scalar>(
    x_b: S,
    r: S,
    t_end: S,
    dt: S,
    g: &Displacement<S>,
    p1: &StepIntegral<S>,
    model: &ModelCoefficients<S>,
) -> Result<S> {
    let nodes = ((t_end / dt).ceil().to_usize().unwrap_or(1).max(1)) * 8;
    let h = t_end / S::lit(nodes as f64);
    let mut acc = S::zero();
    for k in 0..nodes {
        let s = h * (S::lit(k as f64) + S::lit(0.5));
        let x = characteristic_x(x_b, r, s, g, model.grid())?;
        let rate = p1.between(s - h / S::lit(2.0), s + h / S::lit(2.0))? / h;
        acc = acc + rate * model.p2(x) * h;
    }
    Ok(acc)
}
