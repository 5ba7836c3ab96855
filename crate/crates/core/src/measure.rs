//! Finitely supported nonnegative measures on the real line.

use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{same_position, Scalar};

/// A nonnegative measure with finitely many atoms, positions strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteMeasure<S> {
    atoms: Vec<(S, S)>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn zero() -> Self {
        Self { atoms: Vec::new() }
    }

    /// Unit Dirac mass at `x`.
    pub fn dirac(x: S) -> Self {
        Self { atoms: vec![(x, S::one())] }
    }

    /// Builds a measure from raw `(position, weight)` pairs: sorts, merges coincident
    /// positions by adding weights. Nothing is dropped.
    pub fn new(raw: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        Self::with_drop_tolerance(raw, S::zero())
    }

    /// Like [`DiscreteMeasure::new`], but atoms lighter than `drop_tol` are removed and
    /// their mass is added to the nearest surviving atom.
    pub fn with_drop_tolerance(raw: impl IntoIterator<Item = (S, S)>, drop_tol: S) -> Result<Self> {
        let mut atoms: Vec<(S, S)> = Vec::new();
        for (x, w) in raw {
            if !x.is_finite() || !w.is_finite() {
                return Err(Error::NonFinite("measure atom"));
            }
            if w < S::zero() {
                return Err(Error::NegativeWeight { position: x.as_f64(), weight: w.as_f64() });
            }
            atoms.push((x, w));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut merged: Vec<(S, S)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if same_position(last.0, x) => last.1 = last.1 + w,
                _ => merged.push((x, w)),
            }
        }
        if drop_tol > S::zero() {
            merged = reassign_light_atoms(merged, drop_tol);
        }
        Ok(Self { atoms: merged })
    }

    /// Wraps atoms that are already sorted, strictly separated and nonnegative.
    pub(crate) fn from_sorted_unchecked(atoms: Vec<(S, S)>) -> Self {
        debug_assert!(atoms.windows(2).all(|p| p[0].0 < p[1].0));
        debug_assert!(atoms.iter().all(|a| a.1 >= S::zero()));
        Self { atoms }
    }

    pub fn atoms(&self) -> &[(S, S)] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<(S, S)> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = S> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    /// Total mass.
    pub fn total_variation(&self) -> S {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Weight of the atom sitting at `x`, or zero.
    pub fn mass_at(&self, x: S) -> S {
        let idx = self.atoms.partition_point(|a| a.0 < x);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.atoms.get(i))
            .find(|a| same_position(a.0, x))
            .map_or(S::zero(), |a| a.1)
    }

    /// Mass of the set `iv`.
    pub fn mass_in(&self, iv: &Interval<S>) -> S {
        self.atoms.iter().filter(|a| iv.contains(a.0)).map(|a| a.1).sum()
    }

    pub fn restrict(&self, iv: &Interval<S>) -> Self {
        Self { atoms: self.atoms.iter().copied().filter(|a| iv.contains(a.0)).collect() }
    }

    /// Multiplies every weight by `k ≥ 0`.
    pub fn scaled(&self, k: S) -> Self {
        Self { atoms: self.atoms.iter().map(|&(x, w)| (x, w * k)).collect() }
    }

    /// Sum of two measures.
    pub fn add(&self, other: &Self) -> Self {
        let raw = self.atoms.iter().chain(other.atoms.iter()).copied();
        Self::new(raw).expect("sum of valid measures is valid")
    }

    /// `∫ φ dμ`.
    pub fn integrate(&self, phi: impl Fn(S) -> S) -> S {
        self.atoms.iter().map(|&(x, w)| phi(x) * w).sum()
    }

    /// Signed difference `self − other` over the union support.
    pub fn difference(&self, other: &Self) -> SignedAtomVector<S> {
        let (a, b) = (&self.atoms, &other.atoms);
        let mut positions = Vec::with_capacity(a.len() + b.len());
        let mut weights = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let take = match (a.get(i), b.get(j)) {
                (Some(p), Some(q)) if same_position(p.0, q.0) => (true, true),
                (Some(p), Some(q)) => (p.0 < q.0, p.0 > q.0),
                (Some(_), None) => (true, false),
                (None, _) => (false, true),
            };
            let (x, mut w) = match take {
                (true, _) => (a[i].0, a[i].1),
                (false, _) => (b[j].0, S::zero()),
            };
            if take.0 {
                i += 1;
            }
            if take.1 {
                w = w - b[j].1;
                j += 1;
            }
            positions.push(x);
            weights.push(w);
        }
        SignedAtomVector { positions, weights }
    }
}

fn reassign_light_atoms<S: Scalar>(atoms: Vec<(S, S)>, drop_tol: S) -> Vec<(S, S)> {
    let survivors: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].1 >= drop_tol).collect();
    if survivors.is_empty() {
        // keep the heaviest atom so that mass is never destroyed
        let total: S = atoms.iter().map(|a| a.1).sum();
        return atoms
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .map(|&(x, _)| vec![(x, total)])
            .unwrap_or_default();
    }
    let mut out: Vec<(S, S)> = survivors.iter().map(|&i| atoms[i]).collect();
    let mut k = 0;
    for (x, w) in atoms {
        if w >= drop_tol {
            continue;
        }
        while k + 1 < out.len() && out[k + 1].0 <= x {
            k += 1;
        }
        let target = if k + 1 < out.len() && (out[k + 1].0 - x) < (x - out[k].0).abs() { k + 1 } else { k };
        out[target].1 = out[target].1 + w;
    }
    out
}

impl<S: Scalar + Serialize> Serialize for DiscreteMeasure<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.atoms.serialize(serializer)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for DiscreteMeasure<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<(S, S)>::deserialize(deserializer)?;
        Self::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Interval on the real line with independently open or closed ends; infinite ends are
/// encoded by `±∞` bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<S> {
    pub lower: S,
    pub upper: S,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lower: S, upper: S, lower_closed: bool, upper_closed: bool) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::NonFinite("interval bound"));
        }
        let ok = lower < upper || (lower == upper && lower_closed && upper_closed && lower.is_finite());
        if !ok {
            return Err(Error::InvalidInterval(format!(
                "{}{lower}, {upper}{}",
                if lower_closed { '[' } else { '(' },
                if upper_closed { ']' } else { ')' }
            )));
        }
        Ok(Self { lower, upper, lower_closed, upper_closed })
    }

    /// `(a, b]`
    pub fn left_open(a: S, b: S) -> Result<Self> {
        Self::new(a, b, false, true)
    }

    /// `(a, b)`
    pub fn open(a: S, b: S) -> Result<Self> {
        Self::new(a, b, false, false)
    }

    /// `[a, b]`
    pub fn closed(a: S, b: S) -> Result<Self> {
        Self::new(a, b, true, true)
    }

    /// `(−∞, b]`
    pub fn up_to(b: S) -> Self {
        Self { lower: S::neg_infinity(), upper: b, lower_closed: false, upper_closed: true }
    }

    /// `(a, +∞)`
    pub fn beyond(a: S) -> Self {
        Self { lower: a, upper: S::infinity(), lower_closed: false, upper_closed: false }
    }

    pub fn whole_line() -> Self {
        Self { lower: S::neg_infinity(), upper: S::infinity(), lower_closed: false, upper_closed: false }
    }

    /// Membership; a point within position tolerance of a finite end counts as that end.
    pub fn contains(&self, x: S) -> bool {
        let at_lower = self.lower.is_finite() && same_position(x, self.lower);
        let at_upper = self.upper.is_finite() && same_position(x, self.upper);
        if at_lower || at_upper {
            return (at_lower && self.lower_closed) || (at_upper && self.upper_closed);
        }
        x > self.lower && x < self.upper
    }

    pub fn length(&self) -> S {
        self.upper - self.lower
    }
}

/// Signed difference of two discrete measures over their union support.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedAtomVector<S> {
    pub positions: Vec<S>,
    pub weights: Vec<S>,
}

impl<S: Scalar> SignedAtomVector<S> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self { positions: self.positions.clone(), weights: self.weights.iter().map(|&w| -w).collect() }
    }

    /// Total variation `Σ|w|` of the signed measure.
    pub fn total_variation(&self) -> S {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Net mass `Σw`.
    pub fn net_mass(&self) -> S {
        self.weights.iter().copied().sum()
    }

    pub fn positive_part(&self) -> DiscreteMeasure<S> {
        self.sign_split(|w| w.max(S::zero()))
    }

    pub fn negative_part(&self) -> DiscreteMeasure<S> {
        self.sign_split(|w| (-w).max(S::zero()))
    }

    fn sign_split(&self, f: impl Fn(S) -> S) -> DiscreteMeasure<S> {
        DiscreteMeasure::from_sorted_unchecked(
            self.positions.iter().zip(&self.weights).map(|(&x, &w)| (x, f(w))).filter(|a| a.1 > S::zero()).collect(),
        )
    }

    /// Restriction to an interval, keeping the signed weights.
    pub fn restrict(&self, iv: &Interval<S>) -> Self {
        let (positions, weights) =
            self.positions.iter().zip(&self.weights).filter(|(x, _)| iv.contains(**x)).map(|(x, w)| (*x, *w)).unzip();
        Self { positions, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(raw: &[(f64, f64)]) -> DiscreteMeasure<f64> {
        DiscreteMeasure::new(raw.iter().copied()).unwrap()
    }

    #[test]
    fn construction_cases() {
        let z = m(&[]);
        assert!(z.is_empty());
        assert_eq!(z.total_variation(), 0.0);

        let d = m(&[(1.0, 1.0)]);
        assert_eq!(d.atoms(), &[(1.0, 1.0)]);

        let merged = m(&[(2.0, 0.5), (2.0, 0.5)]);
        assert_eq!(merged.atoms(), &[(2.0, 1.0)]);

        let sorted = m(&[(3.0, 1.0), (-1.0, 2.0), (3.0 + 1e-14, 0.25)]);
        assert_eq!(sorted.len(), 2);
        assert_eq!(sorted.atoms()[0], (-1.0, 2.0));
        assert_eq!(sorted.atoms()[1].1, 1.25);
    }

    #[test]
    fn negative_weight_rejected() {
        let err = DiscreteMeasure::new([(0.0, 1.0), (1.0, -0.5)]).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { .. }));
        assert!(DiscreteMeasure::new([(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn drop_tolerance_reassigns_mass() {
        let raw = [(0.0, 1.0), (0.4, 1e-16), (0.9, 1e-16), (1.0, 2.0)];
        let d = DiscreteMeasure::with_drop_tolerance(raw, 1e-14).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.atoms()[0].1, 1.0 + 1e-16);
        assert_eq!(d.atoms()[1].1, 2.0 + 1e-16);

        let all_light = DiscreteMeasure::with_drop_tolerance([(0.0, 1e-16), (1.0, 2e-16)], 1e-14).unwrap();
        assert_eq!(all_light.atoms(), &[(1.0, 3e-16)]);
    }

    #[test]
    fn total_variation_cases() {
        assert_eq!(m(&[(1.0, 1.0)]).total_variation(), 1.0);
        assert!((m(&[(0.0, 0.3), (1.0, 0.7)]).total_variation() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mass_at_cases() {
        let x1 = 1.0;
        let d = m(&[(x1, 1.0)]);
        assert_eq!(d.mass_at(x1), 1.0);
        assert_eq!(d.mass_at(x1 + 1e-3), 0.0);
        assert_eq!(d.mass_at(x1 + 1e-15), 1.0);

        let c1: f64 = 2.0;
        let eps = 0.1;
        let stay = (-c1 * eps).exp();
        let mixed = m(&[(x1, stay), (x1 + 0.025, 0.1), (x1 + 0.075, 0.08)]);
        assert_eq!(mixed.mass_at(x1), stay);
    }

    #[test]
    fn restrict_cases() {
        let x0 = 0.0;
        let x1 = 1.0;
        let x2 = 2.0;
        let d = m(&[(x1, 1.0)]);
        assert_eq!(d.restrict(&Interval::left_open(x0, x1).unwrap()), d);
        assert!(d.restrict(&Interval::left_open(x1, x2).unwrap()).is_empty());

        let three = m(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]);
        assert_eq!(three.restrict(&Interval::open(0.0, 2.0).unwrap()).atoms(), &[(1.0, 1.0)]);
        assert_eq!(three.restrict(&Interval::up_to(0.0)).atoms(), &[(0.0, 1.0)]);
        assert!(three.restrict(&Interval::beyond(2.0)).is_empty());
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::open(1.0, 1.0).is_err());
        assert!(Interval::closed(1.0, 1.0).is_ok());
        assert!(Interval::left_open(2.0, 1.0).is_err());
        let single = Interval::closed(1.0, 1.0).unwrap();
        assert!(single.contains(1.0));
        assert!(!single.contains(1.1));
    }

    #[test]
    fn difference_cases() {
        let d0 = m(&[(0.0, 1.0)]);
        let same = d0.difference(&d0);
        assert_eq!(same.positions, vec![0.0]);
        assert_eq!(same.weights, vec![0.0]);

        let eps = 0.25;
        let de = m(&[(eps, 1.0)]);
        let diff = d0.difference(&de);
        assert_eq!(diff.positions, vec![0.0, eps]);
        assert_eq!(diff.weights, vec![1.0, -1.0]);

        let two = m(&[(0.0, 2.0)]);
        let one = m(&[(0.0, 1.0)]);
        let d = two.difference(&one);
        assert_eq!((d.positions.as_slice(), d.weights.as_slice()), (&[0.0][..], &[1.0][..]));
        assert_eq!(d.positive_part().atoms(), &[(0.0, 1.0)]);
        assert!(d.negative_part().is_empty());
    }

    #[test]
    fn json_shape() {
        let d = m(&[(1.0, 0.5), (0.0, 0.25)]);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "[[0.0,0.25],[1.0,0.5]]");
        let back: DiscreteMeasure<f64> = serde_json::from_str("[[1.0,0.5],[0.0,0.25],[1.0,0.5]]").unwrap();
        assert_eq!(back.atoms(), &[(0.0, 0.25), (1.0, 1.0)]);
        assert!(serde_json::from_str::<DiscreteMeasure<f64>>("[[0.0,-1.0]]").is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let d = DiscreteMeasure::<f32>::new([(0.5, 0.25), (0.5, 0.25)]).unwrap();
        assert_eq!(d.total_variation(), 0.5f32);
    }
}
