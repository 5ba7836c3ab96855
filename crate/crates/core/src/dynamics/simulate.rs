//! Explicit particle scheme. Within a step `v` is frozen at the mass sitting at `x_N`.
//! Free atoms advance by `g₁(v)·dt` and stop at the first breakpoint they reach. Mass
//! parked at `x_i` (`i < N`) decays at rate `c_i(v)` and the released mass re-enters
//! the continuum as new atoms inside the step's emission window `[x_i, x_i + g₁(v)·dt]`.

use serde::{Deserialize, Serialize};

use super::model::{ModelCoefficients, SolverSettings};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::scalar::{same_position, Scalar};

/// Snapshots `μ(k·dt)` for `k = 0..=K` and `v(k·dt) = μ(k·dt)({x_N})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct Trajectory<S> {
    pub dt: S,
    pub times: Vec<S>,
    pub snapshots: Vec<DiscreteMeasure<S>>,
    pub v_series: Vec<S>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &DiscreteMeasure<S> {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }

    /// `v` on each step, for feeding the characteristic formulas (drops the final sample).
    pub fn step_v(&self) -> &[S] {
        &self.v_series[..self.v_series.len().saturating_sub(1)]
    }
}

struct State<S> {
    points: Vec<S>,
    /// atoms strictly between breakpoints, sorted
    free: Vec<(S, S)>,
    /// mass waiting at each breakpoint
    parked: Vec<S>,
}

/// Runs the scheme up to the first step time `≥ horizon`, one outflow atom per parked
/// site per step.
pub fn simulate<S: Scalar>(
    m0: &DiscreteMeasure<S>,
    model: &ModelCoefficients<S>,
    horizon: S,
    dt: S,
    quad_particles_per_step: usize,
) -> Result<Trajectory<S>> {
    let settings = SolverSettings { quad_particles_per_step, ..SolverSettings::new(dt, horizon) };
    simulate_with(m0, model, &settings)
}

pub fn simulate_with<S: Scalar>(
    m0: &DiscreteMeasure<S>,
    model: &ModelCoefficients<S>,
    settings: &SolverSettings<S>,
) -> Result<Trajectory<S>> {
    let (dt, horizon) = (settings.dt, settings.horizon);
    if !(dt > S::zero()) || !dt.is_finite() {
        return Err(Error::InvalidStep(format!("dt must be positive and finite, got {dt}")));
    }
    if !(horizon >= S::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidStep(format!("horizon must be non-negative and finite, got {horizon}")));
    }
    if settings.quad_particles_per_step == 0 {
        return Err(Error::InvalidStep("quad_particles_per_step must be at least 1".into()));
    }
    let grid = model.grid();
    let (lo, hi) = (grid.first(), grid.last());
    if let Some(&(x, _)) =
        m0.atoms().iter().find(|a| (a.0 < lo || a.0 > hi) && !same_position(a.0, lo) && !same_position(a.0, hi))
    {
        return Err(Error::AssumptionViolated(format!("initial support in [x_0, x_N] (atom at {x})")));
    }
    let steps = (horizon / dt - S::lit(1e-9)).ceil().max(S::zero()).to_usize().unwrap_or(0);
    let mut state = State::from_measure(m0, model);
    let mut snapshot = state.snapshot(settings.drop_tolerance)?;
    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        snapshots: Vec::with_capacity(steps + 1),
        v_series: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        traj.times.push(dt * S::lit(k as f64));
        traj.v_series.push(snapshot.mass_at(hi));
        traj.snapshots.push(snapshot);
        if k == steps {
            break;
        }
        state.advance(model, dt, settings);
        snapshot = state.snapshot(settings.drop_tolerance)?;
        state = State::from_measure(&snapshot, model);
    }
    Ok(traj)
}

impl<S: Scalar> State<S> {
    fn from_measure(m: &DiscreteMeasure<S>, model: &ModelCoefficients<S>) -> Self {
        let grid = model.grid();
        let mut parked = vec![S::zero(); grid.points().len()];
        let mut free = Vec::with_capacity(m.len() + grid.points().len());
        for &(x, w) in m.atoms() {
            match grid.index_of(x) {
                Some(i) => parked[i] = parked[i] + w,
                None => free.push((x, w)),
            }
        }
        Self { points: grid.points().to_vec(), free, parked }
    }

    fn snapshot(&self, drop_tol: S) -> Result<DiscreteMeasure<S>> {
        let parked = self.parked.iter().zip(&self.points).filter(|(w, _)| **w > S::zero()).map(|(w, x)| (*x, *w));
        let raw: Vec<(S, S)> = self.free.iter().copied().chain(parked).collect();
        DiscreteMeasure::with_drop_tolerance(raw, drop_tol)
    }

    fn advance(&mut self, model: &ModelCoefficients<S>, dt: S, settings: &SolverSettings<S>) {
        let n = self.points.len() - 1;
        let v = self.parked[n];
        let g = model.g1().eval(v);
        let rates: Vec<S> = (0..n).map(|i| model.c(i).eval(v)).collect();
        let q = settings.quad_particles_per_step;

        if model.has_growth() {
            let p1 = model.p1().eval(v);
            for atom in &mut self.free {
                atom.1 = atom.1 * (p1 * model.p2(atom.0) * dt).exp();
            }
            for (w, &x) in self.parked.iter_mut().zip(&self.points) {
                *w = *w * (p1 * model.p2(x) * dt).exp();
            }
        }

        let mut emitted: Vec<(S, S)> = Vec::new();
        let mut arrivals = vec![S::zero(); n + 1];
        for i in 0..n {
            let m = self.parked[i];
            if m > S::zero() {
                self.parked[i] = self.emit(i, m, dt, g, rates[i], q, &mut emitted, &mut arrivals);
            }
        }

        let mut moved = Vec::with_capacity(self.free.len());
        for &(x, w) in &self.free {
            let j = self.points.partition_point(|p| *p <= x);
            let target = x + g * dt;
            match self.points.get(j) {
                Some(&p) if target >= p || same_position(target, p) => {
                    let residual = (dt - (p - x) / g).max(S::zero());
                    if j == n {
                        arrivals[n] = arrivals[n] + w;
                    } else {
                        let kept = self.emit(j, w, residual, g, rates[j], q, &mut emitted, &mut arrivals);
                        arrivals[j] = arrivals[j] + kept;
                    }
                }
                _ => moved.push((target, w)),
            }
        }
        for (p, a) in self.parked.iter_mut().zip(arrivals) {
            *p = *p + a;
        }

        moved.extend(emitted);
        moved.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite positions"));
        self.free = if settings.merge_tolerance > S::zero() {
            merge_close(moved, settings.merge_tolerance, &self.points)
        } else {
            moved
        };
    }

    /// Releases mass `m` parked at `x_i` over a window of length `window` at the end of
    /// the step, as `q` atoms with exact per-sub-window masses. Returns the mass kept.
    #[allow(clippy::too_many_arguments)]
    fn emit(&self, i: usize, m: S, window: S, g: S, rate: S, q: usize, out: &mut Vec<(S, S)>, arrivals: &mut [S]) -> S {
        if rate <= S::zero() || window <= S::zero() {
            return m;
        }
        let (x, next) = (self.points[i], self.points[i + 1]);
        let sub = window / S::lit(q as f64);
        let mut kept = m;
        for j in 0..q {
            let released = kept * -(-rate * sub).exp_m1();
            kept = kept - released;
            // released during [j·sub, (j+1)·sub] after parking began; travels the rest
            let travel = g * (window - sub * (S::lit(j as f64) + S::lit(0.5)));
            let pos = x + travel;
            if pos >= next || same_position(pos, next) {
                arrivals[i + 1] = arrivals[i + 1] + released;
            } else {
                out.push((pos, released));
            }
        }
        kept
    }
}

/// Merges neighbours closer than `tol` that lie in the same grid cell into their
/// mass-weighted centroid.
fn merge_close<S: Scalar>(atoms: Vec<(S, S)>, tol: S, points: &[S]) -> Vec<(S, S)> {
    let cell = |x: S| points.partition_point(|p| *p < x);
    let mut out: Vec<(S, S)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match out.last_mut() {
            Some(last) if x - last.0 <= tol && cell(x) == cell(last.0) && last.1 + w > S::zero() => {
                let total = last.1 + w;
                last.0 = (last.0 * last.1 + x * w) / total;
                last.1 = total;
            }
            _ => out.push((x, w)),
        }
    }
    out
}
