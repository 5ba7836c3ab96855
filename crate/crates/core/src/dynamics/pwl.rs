use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Continuous piecewise-linear function given by a knot table, constant beyond the
/// end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn<S> {
    knots: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> PiecewiseLinearFn<S> {
    pub fn new(knots: Vec<S>, values: Vec<S>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidTable(format!(
                "{} knots and {} values; need matching non-empty lists",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("piecewise-linear table"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTable("knots must be strictly increasing".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn from_pairs(pairs: &[(S, S)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn constant(value: S) -> Self {
        Self { knots: vec![S::zero()], values: vec![value] }
    }

    pub fn knots(&self) -> &[S] {
        &self.knots
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn eval(&self, x: S) -> S {
        let k = self.knots.partition_point(|&p| p <= x);
        if k == 0 {
            return self.values[0];
        }
        if k == self.knots.len() {
            return self.values[k - 1];
        }
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn sup(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn inf(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    /// Largest slope magnitude over the segments.
    pub fn lipschitz(&self) -> S {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
            .fold(S::zero(), S::max)
    }

    /// Infimum over `[a, b]`; attained at an end point or a knot.
    pub fn inf_on(&self, a: S, b: S) -> S {
        self.extremum_on(a, b, S::min, S::infinity())
    }

    pub fn sup_on(&self, a: S, b: S) -> S {
        self.extremum_on(a, b, S::max, S::neg_infinity())
    }

    fn extremum_on(&self, a: S, b: S, pick: fn(S, S) -> S, init: S) -> S {
        let (a, b) = (a.min(b), a.max(b));
        self.knots
            .iter()
            .zip(&self.values)
            .filter(|(k, _)| **k > a && **k < b)
            .map(|(_, v)| *v)
            .chain([self.eval(a), self.eval(b)])
            .fold(init, pick)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == S::zero())
    }

    pub fn scaled(&self, k: S) -> Self {
        Self { knots: self.knots.clone(), values: self.values.iter().map(|&v| v * k).collect() }
    }
}

impl<S: Scalar + Serialize> Serialize for PiecewiseLinearFn<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let pairs: Vec<(S, S)> = self.knots.iter().copied().zip(self.values.iter().copied()).collect();
        pairs.serialize(serializer)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TableRepr<S> {
    Constant(S),
    Pairs(Vec<(S, S)>),
}

/// Accepts either a `[[knot, value], ...]` table or a bare number for a constant.
impl<'de, S: Scalar + DeserializeOwned> Deserialize<'de> for PiecewiseLinearFn<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match TableRepr::<S>::deserialize(deserializer)? {
            TableRepr::Constant(c) => Ok(Self::constant(c)),
            TableRepr::Pairs(p) => Self::from_pairs(&p).map_err(serde::de::Error::custom),
        }
    }
}
