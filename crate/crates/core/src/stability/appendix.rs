//! Sampled checks of the elementary inequalities behind the estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::compute_min_g1;
use crate::dynamics::{hitting_time_tau, ModelCoefficients, StepIntegral, Trajectory};
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` seen.
    pub worst_slack: f64,
}

impl InequalityCheck {
    fn new(name: &str) -> Self {
        Self { name: name.to_owned(), samples: 0, violations: 0, worst_slack: f64::INFINITY }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        self.worst_slack = self.worst_slack.min(rhs - lhs);
        if lhs > rhs * (1.0 + 1e-12) + 1e-14 {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixReport {
    pub checks: Vec<InequalityCheck>,
}

impl AppendixReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

/// Samples each exponential inequality `samples` times, arguments in `[0, 5]`.
pub fn check_appendix_inequalities(samples: usize, seed: u64) -> AppendixReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut one = InequalityCheck::new("|e^x - 1| <= |x| e^x");
    let mut two = InequalityCheck::new("|e^x - e^y| <= |x - y| e^max(x,y)");
    let mut three = InequalityCheck::new("|e^-x - e^-y| <= |x - y| e^-min(x,y)");
    let mut sup = InequalityCheck::new("sup|e^xi - 1| <= sup|xi| e^sup|xi|");
    let mut integral = InequalityCheck::new("|e^int f1 - e^int f2| <= e^(3T sup|f|) int|f1 - f2|");
    for _ in 0..samples {
        let (x, y): (f64, f64) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
        one.record((x.exp() - 1.0).abs(), x * x.exp());
        two.record((x.exp() - y.exp()).abs(), (x - y).abs() * x.max(y).exp());
        three.record(((-x).exp() - (-y).exp()).abs(), (x - y).abs() * (-x.min(y)).exp());

        let xi: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..3.0)).collect();
        let s = xi.iter().fold(0.0_f64, |a, &b| a.max(b));
        sup.record(xi.iter().map(|v| v.exp_m1().abs()).fold(0.0, f64::max), s * s.exp());

        // piecewise-constant f¹, f² on 16 equal pieces of [0, T], integrated over [r, T]
        let t: f64 = rng.gen_range(0.01..2.0);
        let f1: Vec<f64> = (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f2: Vec<f64> = (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r: f64 = rng.gen_range(0.0..t);
        let h = t / 16.0;
        let tail = |f: &[f64]| -> f64 {
            let p = StepIntegral::new(h, f.to_vec());
            p.between(r, t).expect("r within [0, T]")
        };
        let diff: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| (a - b).abs()).collect();
        let bound = f1.iter().chain(&f2).fold(0.0_f64, |a, b| a.max(b.abs()));
        integral.record((tail(&f1).exp() - tail(&f2).exp()).abs(), (3.0 * t * bound).exp() * tail(&diff));
    }
    AppendixReport { checks: vec![one, two, three, sup, integral] }
}

/// `|τ₂(x_b) − τ₁(x_b)| ≤ Lip g₁ / min g₁ · ∫₀ᵀ |v₂ − v₁|` for every start point whose
/// hitting time is below `t_end` in both runs.
pub fn check_tau_bound<S: Scalar>(
    traj1: &Trajectory<S>,
    traj2: &Trajectory<S>,
    model: &ModelCoefficients<S>,
    starts: &[S],
    t_end: S,
) -> Result<InequalityCheck> {
    let tv = traj1.snapshots[0].total_variation() + traj2.snapshots[0].total_variation();
    let min_g = compute_min_g1(model, tv)?;
    let dt = traj1.dt;
    let steps = traj1.step_v().len().min(traj2.step_v().len()).min((t_end / dt).ceil().to_usize().unwrap_or(0));
    let (v1, v2) = (&traj1.step_v()[..steps], &traj2.step_v()[..steps]);
    let g1 = StepIntegral::of_series(dt, v1, model.g1());
    let g2 = StepIntegral::of_series(dt, v2, model.g1());
    let gap: S = v1.iter().zip(v2).map(|(a, b)| (*a - *b).abs() * dt).sum();
    let rhs = model.lip_g1() / min_g * gap;
    let mut check = InequalityCheck::new("|tau2 - tau1| <= Lip g1 / min g1 * int|v2 - v1|");
    for &x in starts {
        let (t1, t2) = (hitting_time_tau(x, &g1, model.grid()), hitting_time_tau(x, &g2, model.grid()));
        if t1.is_finite() && t2.is_finite() && t1 <= t_end && t2 <= t_end {
            check.record((t2 - t1).abs().as_f64(), rhs.as_f64() + 1e-9 * dt.as_f64());
        }
    }
    Ok(check)
}
