use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::Interval;
use crate::scalar::{same_position, Scalar};

/// Discrete states `x₀ < x₁ < … < x_N`, `N ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointGrid<S> {
    points: Vec<S>,
}

impl<S: Scalar> BreakpointGrid<S> {
    pub fn new(points: Vec<S>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!("need at least two points, got {}", points.len())));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("grid point"));
        }
        if let Some(w) = points.windows(2).find(|w| w[0] >= w[1] || same_position(w[0], w[1])) {
            return Err(Error::InvalidGrid(format!("points not strictly increasing at {} ≥ {}", w[0], w[1])));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[S] {
        &self.points
    }

    /// `N`, the index of the last point.
    pub fn last_index(&self) -> usize {
        self.points.len() - 1
    }

    pub fn first(&self) -> S {
        self.points[0]
    }

    pub fn last(&self) -> S {
        self.points[self.points.len() - 1]
    }

    pub fn point(&self, i: usize) -> S {
        self.points[i]
    }

    /// Smallest gap `min |x_i − x_{i−1}|`.
    pub fn min_gap(&self) -> S {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(S::infinity(), S::min)
    }

    /// Index of the grid point at `x`, if any.
    pub fn index_of(&self, x: S) -> Option<usize> {
        let idx = self.points.partition_point(|p| *p < x);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .find(|&i| i < self.points.len() && same_position(self.points[i], x))
    }

    /// The `N + 2` test intervals `(−∞,x₀], (x₀,x₁], …, (x_{N−1},x_N], (x_N,+∞)`.
    pub fn test_intervals(&self) -> Vec<Interval<S>> {
        let mut out = Vec::with_capacity(self.points.len() + 1);
        out.push(Interval::up_to(self.first()));
        for w in self.points.windows(2) {
            out.push(Interval { lower: w[0], upper: w[1], lower_closed: false, upper_closed: true });
        }
        out.push(Interval::beyond(self.last()));
        out
    }

    /// Index `k` of the test interval containing `x`: `0` for `(−∞,x₀]`, `i` for
    /// `(x_{i−1},x_i]`, `N+1` for `(x_N,∞)`.
    pub fn cell_of(&self, x: S) -> usize {
        if let Some(i) = self.index_of(x) {
            return i;
        }
        self.points.partition_point(|p| *p < x)
    }

    /// Smallest grid point `≥ x` (within tolerance), if any.
    pub fn next_at_or_above(&self, x: S) -> Option<(usize, S)> {
        if let Some(i) = self.index_of(x) {
            return Some((i, self.points[i]));
        }
        let idx = self.points.partition_point(|p| *p < x);
        self.points.get(idx).map(|&p| (idx, p))
    }
}

impl<S: Scalar + Serialize> Serialize for BreakpointGrid<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.points.serialize(serializer)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for BreakpointGrid<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Self::new(Vec::<S>::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}
