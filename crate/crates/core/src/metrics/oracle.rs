//! Brute-force reference values by exhaustive vertex enumeration.
//!
//! Flat and measure-transmission: every vertex of the polytope of admissible
//! test-function values at the union support. Norm: every sign vector. Wasserstein:
//! every basic feasible transport plan between the atoms. Shares no code with the
//! fast paths.

use crate::error::{Error, Result};
use crate::grid::BreakpointGrid;
use crate::measure::DiscreteMeasure;
use crate::metrics::MetricKind;
use crate::scalar::{same_position, Scalar};

/// Largest combined support the oracle accepts.
pub const ORACLE_CAP: usize = 6;

pub fn metric_oracle<S: Scalar>(
    kind: MetricKind,
    m1: &DiscreteMeasure<S>,
    m2: &DiscreteMeasure<S>,
    grid: Option<&BreakpointGrid<S>>,
) -> Result<S> {
    let support = union_support(m1, m2);
    if support.len() > ORACLE_CAP {
        return Err(Error::TooLarge { size: support.len(), cap: ORACLE_CAP });
    }
    let weights: Vec<S> = support.iter().map(|&x| m1.mass_at(x) - m2.mass_at(x)).collect();
    match kind {
        MetricKind::NormDistance => Ok(sign_vector_max(&weights)),
        MetricKind::Flat => Ok(vertex_max(&support, &weights, |_, _| true)),
        MetricKind::MeasureTransmission => {
            let grid = grid.ok_or(Error::MissingGrid)?;
            let intervals = grid.test_intervals();
            let cell = |x: S| intervals.iter().position(|iv| iv.contains(x));
            Ok(vertex_max(&support, &weights, |a, b| cell(a) == cell(b)))
        }
        MetricKind::Wasserstein1 => transport_min(m1, m2),
    }
}

fn union_support<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>) -> Vec<S> {
    let mut pts: Vec<S> = m1.positions().chain(m2.positions()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite positions"));
    pts.dedup_by(|a, b| same_position(*a, *b));
    pts
}

fn sign_vector_max<S: Scalar>(weights: &[S]) -> S {
    let n = weights.len();
    (0..1usize << n)
        .map(|mask| {
            (0..n).map(|k| if mask >> k & 1 == 1 { weights[k] } else { -weights[k] }).fold(S::zero(), |a, b| a + b)
        })
        .fold(S::zero(), S::max)
}

/// Maximises `Σ w_k ψ_k` over the polytope `|ψ_k| ≤ 1`, `|ψ_{k+1} − ψ_k| ≤ p_{k+1} − p_k`
/// for neighbours with `linked(p_k, p_{k+1})`, by visiting all vertices.
fn vertex_max<S: Scalar>(positions: &[S], weights: &[S], linked: impl Fn(S, S) -> bool) -> S {
    let n = positions.len();
    if n == 0 {
        return S::zero();
    }
    let mut rows: Vec<(Vec<S>, S)> = Vec::new();
    for k in 0..n {
        let mut e = vec![S::zero(); n];
        e[k] = S::one();
        rows.push((e.clone(), S::one()));
        e[k] = -S::one();
        rows.push((e, S::one()));
    }
    for a in 0..n.saturating_sub(1) {
        let b = a + 1;
        if !linked(positions[a], positions[b]) {
            continue;
        }
        let d = positions[b] - positions[a];
        let mut e = vec![S::zero(); n];
        e[a] = S::one();
        e[b] = -S::one();
        rows.push((e.clone(), d));
        e[a] = -S::one();
        e[b] = S::one();
        rows.push((e, d));
    }
    let tol = S::lit(1e-10);
    let mut best = S::neg_infinity();
    for_each_subset(rows.len(), n, &mut |chosen| {
        let a: Vec<Vec<S>> = chosen.iter().map(|&r| rows[r].0.clone()).collect();
        let b: Vec<S> = chosen.iter().map(|&r| rows[r].1).collect();
        let Some(x) = solve_square(a, b) else { return };
        let feasible = rows.iter().all(|(coef, rhs)| dot(coef, &x) <= *rhs + tol);
        if feasible {
            best = best.max(dot(weights, &x));
        }
    });
    best.max(S::zero())
}

/// Minimum transport cost over every basic feasible plan of the transportation polytope.
fn transport_min<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>) -> Result<S> {
    let (a, b) = (m1.atoms(), m2.atoms());
    let (ma, mb) = (m1.total_variation(), m2.total_variation());
    if (ma - mb).abs() > S::lit(1e-12) * S::one().max(ma) {
        return Err(Error::UnequalMass(ma.as_f64(), mb.as_f64()));
    }
    if ma <= S::zero() {
        return Err(Error::ZeroMass);
    }
    let (n1, n2) = (a.len(), b.len());
    let vars = n1 * n2;
    // row sums and all but the last column sum; the dropped one is implied
    let mut eq: Vec<(Vec<S>, S)> = Vec::new();
    for i in 0..n1 {
        let mut e = vec![S::zero(); vars];
        for j in 0..n2 {
            e[i * n2 + j] = S::one();
        }
        eq.push((e, a[i].1));
    }
    for j in 0..n2.saturating_sub(1) {
        let mut e = vec![S::zero(); vars];
        for i in 0..n1 {
            e[i * n2 + j] = S::one();
        }
        eq.push((e, b[j].1 * ma / mb));
    }
    let rank = eq.len();
    let cost: Vec<S> = (0..vars).map(|v| (a[v / n2].0 - b[v % n2].0).abs()).collect();
    let mut best = S::infinity();
    for_each_subset(vars, rank, &mut |basic| {
        let mat: Vec<Vec<S>> = eq.iter().map(|(e, _)| basic.iter().map(|&v| e[v]).collect()).collect();
        let rhs: Vec<S> = eq.iter().map(|(_, r)| *r).collect();
        let Some(xb) = solve_square(mat, rhs) else { return };
        if xb.iter().any(|&v| v < -S::lit(1e-12)) {
            return;
        }
        let c: S = basic.iter().zip(&xb).map(|(&v, &x)| cost[v] * x).sum();
        best = best.min(c);
    });
    Ok(best)
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if acc.len() == k {
            f(acc);
            return;
        }
        for i in start..n {
            if n - i < k - acc.len() {
                break;
            }
            acc.push(i);
            rec(i + 1, n, k, acc, f);
            acc.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))?;
        if a[piv][col].abs() < S::lit(1e-12) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor == S::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] = a[r][c] - factor * v;
            }
            b[r] = b[r] - factor * b[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for r in (0..n).rev() {
        let s: S = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
