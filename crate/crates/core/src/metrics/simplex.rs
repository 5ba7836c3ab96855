//! Dense tableau simplex for `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible, so a single phase suffices. Bland's rule guards against
//! cycling on the heavily degenerate programs produced by the metric reductions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    pub objective: Vec<S>,
    pub rows: Vec<(Vec<S>, S)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub x: Vec<S>,
    pub objective: S,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(objective: Vec<S>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<S>, rhs: S) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution<S>> {
        let n = self.objective.len();
        let m = self.rows.len();
        if self.rows.iter().any(|(_, b)| *b < S::zero()) {
            return Err(Error::Lp("negative right-hand side; origin infeasible".into()));
        }
        let width = n + m + 1;
        // tableau rows 0..m are constraints, row m is the reduced-cost row
        let mut t = vec![S::zero(); (m + 1) * width];
        for (i, (a, b)) in self.rows.iter().enumerate() {
            t[i * width..i * width + n].copy_from_slice(a);
            t[i * width + n + i] = S::one();
            t[i * width + width - 1] = *b;
        }
        for j in 0..n {
            t[m * width + j] = -self.objective[j];
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        let eps = S::lit(1e-11);
        let max_iter = 50 * (n + m + 10);
        let mut status = LpStatus::IterationLimit;
        for _ in 0..max_iter {
            let Some(col) = (0..n + m).find(|&j| t[m * width + j] < -eps) else {
                status = LpStatus::Optimal;
                break;
            };
            let mut pivot: Option<(usize, S)> = None;
            for i in 0..m {
                let a = t[i * width + col];
                if a > eps {
                    let ratio = t[i * width + width - 1] / a;
                    pivot = match pivot {
                        Some((r, best)) if ratio > best + eps || (ratio >= best - eps && basis[i] > basis[r]) => {
                            Some((r, best))
                        }
                        _ => Some((i, ratio)),
                    };
                }
            }
            let Some((row, _)) = pivot else {
                status = LpStatus::Unbounded;
                break;
            };
            let p = t[row * width + col];
            for j in 0..width {
                t[row * width + j] = t[row * width + j] / p;
            }
            for i in 0..=m {
                if i == row {
                    continue;
                }
                let factor = t[i * width + col];
                if factor != S::zero() {
                    for j in 0..width {
                        let v = t[row * width + j];
                        t[i * width + j] = t[i * width + j] - factor * v;
                    }
                }
            }
            basis[row] = col;
        }
        let mut x = vec![S::zero(); n];
        for (i, &bv) in basis.iter().enumerate() {
            if bv < n {
                x[bv] = t[i * width + width - 1];
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| *c * *v).sum();
        Ok(LpSolution { status, x, objective })
    }
}

/// Bounded-Lipschitz program solved by simplex. Returns the optimal value and the
/// optimal test-function values at the support points.
pub fn bounded_lipschitz_simplex<S: Scalar>(positions: &[S], weights: &[S]) -> Result<(S, Vec<S>)> {
    let n = positions.len();
    if n == 0 {
        return Ok((S::zero(), Vec::new()));
    }
    // shift ψ = u − 1 so that u ∈ [0, 2] and the origin is feasible
    let mut lp = LinearProgram::new(weights.to_vec());
    let two = S::lit(2.0);
    for k in 0..n {
        let mut row = vec![S::zero(); n];
        row[k] = S::one();
        lp.add_row(row, two);
    }
    for k in 1..n {
        let gap = positions[k] - positions[k - 1];
        if gap >= two {
            continue;
        }
        let mut up = vec![S::zero(); n];
        up[k] = S::one();
        up[k - 1] = -S::one();
        let down: Vec<S> = up.iter().map(|&v| -v).collect();
        lp.add_row(up, gap);
        lp.add_row(down, gap);
    }
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("{:?}", sol.status)));
    }
    let shift: S = weights.iter().copied().sum();
    let psi = sol.x.iter().map(|&u| u - S::one()).collect();
    Ok(((sol.objective - shift).max(S::zero()), psi))
}
