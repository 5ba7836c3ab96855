//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real field used for positions, weights and times: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot represent
    /// finite `f64` values, which never happens for the float types implemented here.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Relative tolerance under which two positions denote the same atom.
    #[inline]
    fn position_rel_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(8.0))
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `|a − b| ≤ tol·max(1, |a|, |b|)`.
#[inline]
pub fn same_position<S: Scalar>(a: S, b: S) -> bool {
    let scale = S::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= S::position_rel_tol() * scale
}
