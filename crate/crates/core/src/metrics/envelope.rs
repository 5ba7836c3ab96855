//! Exact solver for the bounded-Lipschitz linear program on a sorted support:
//!
//! maximize `Σ s_k ψ_k` subject to `|ψ_k| ≤ 1` and `|ψ_{k+1} − ψ_k| ≤ p_{k+1} − p_k`.
//!
//! Sweeps the support left to right keeping the value function
//! `f_k(y) = max{ Σ_{j≤k} s_j ψ_j : ψ_k = y }`, a concave piecewise-linear function on
//! `[−1, 1]`. Moving to the next point replaces `f` by its sliding-window maximum
//! (window half-width = gap), then adds the linear term `s_k·y`. Both steps act on a
//! slope/length list split at the maximiser, so each point costs amortised O(1) plus
//! the segments that change sign.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
struct Segment<S> {
    len: S,
    /// slope minus the current global offset
    raw: S,
}

/// Concave piecewise-linear function on `[−1, 1]` in slope/length form.
#[derive(Debug)]
struct ConcavePwl<S> {
    /// f(−1)
    base: S,
    /// segments with positive slope, ordered left to right
    rising: VecDeque<Segment<S>>,
    /// segments with non-positive slope, ordered left to right
    falling: VecDeque<Segment<S>>,
    offset: S,
    rising_len: S,
    rising_raw_len: S,
    falling_len: S,
}

impl<S: Scalar> ConcavePwl<S> {
    fn zero() -> Self {
        let two = S::lit(2.0);
        let mut falling = VecDeque::new();
        falling.push_back(Segment { len: two, raw: S::zero() });
        Self {
            base: S::zero(),
            rising: VecDeque::new(),
            falling,
            offset: S::zero(),
            rising_len: S::zero(),
            rising_raw_len: S::zero(),
            falling_len: two,
        }
    }

    fn max_value(&self) -> S {
        self.base + self.rising_raw_len + self.offset * self.rising_len
    }

    fn add_linear(&mut self, s: S) {
        if s == S::zero() {
            return;
        }
        self.offset = self.offset + s;
        self.base = self.base - s;
        while let Some(seg) = self.falling.front().copied() {
            if seg.raw + self.offset <= S::zero() {
                break;
            }
            self.falling.pop_front();
            self.falling_len = self.falling_len - seg.len;
            self.push_rising_back(seg);
        }
        while let Some(seg) = self.rising.back().copied() {
            if seg.raw + self.offset > S::zero() {
                break;
            }
            self.rising.pop_back();
            self.rising_len = self.rising_len - seg.len;
            self.rising_raw_len = self.rising_raw_len - seg.raw * seg.len;
            self.falling.push_front(seg);
            self.falling_len = self.falling_len + seg.len;
        }
    }

    fn push_rising_back(&mut self, seg: Segment<S>) {
        self.rising_len = self.rising_len + seg.len;
        self.rising_raw_len = self.rising_raw_len + seg.raw * seg.len;
        self.rising.push_back(seg);
    }

    /// `f ← y ↦ max{ f(z) : |z − y| ≤ d, z ∈ [−1,1] }`.
    fn window_max(&mut self, d: S) {
        let two = S::lit(2.0);
        let peak = self.max_value();
        if d >= two {
            *self = Self::zero();
            self.base = peak;
            return;
        }
        let plateau = self.rising_len.min(d) + self.falling_len.min(d);

        // drop the first `d` of the rising part; f(−1) becomes f(−1 + d)
        let mut left = d;
        while left > S::zero() {
            let Some(seg) = self.rising.front_mut() else { break };
            let slope = seg.raw + self.offset;
            if seg.len <= left {
                let seg = *seg;
                self.rising.pop_front();
                self.base = self.base + slope * seg.len;
                self.rising_len = self.rising_len - seg.len;
                self.rising_raw_len = self.rising_raw_len - seg.raw * seg.len;
                left = left - seg.len;
            } else {
                seg.len = seg.len - left;
                self.base = self.base + slope * left;
                self.rising_len = self.rising_len - left;
                self.rising_raw_len = self.rising_raw_len - seg.raw * left;
                left = S::zero();
            }
        }
        if self.rising.is_empty() {
            // the rising part is exhausted: re-anchor on the exact peak value
            self.base = peak;
            self.rising_len = S::zero();
            self.rising_raw_len = S::zero();
        }

        // drop the last `d` of the falling part
        let mut right = d;
        while right > S::zero() {
            let Some(seg) = self.falling.back_mut() else { break };
            if seg.len <= right {
                right = right - seg.len;
                self.falling_len = self.falling_len - seg.len;
                self.falling.pop_back();
            } else {
                seg.len = seg.len - right;
                self.falling_len = self.falling_len - right;
                right = S::zero();
            }
        }
        if self.falling.is_empty() {
            self.falling_len = S::zero();
        }

        if plateau > S::zero() {
            self.falling.push_front(Segment { len: plateau, raw: -self.offset });
            self.falling_len = self.falling_len + plateau;
        }
    }
}

/// Value of the bounded-Lipschitz program for signed weights `weights` at strictly
/// increasing `positions`.
pub fn bounded_lipschitz_sup<S: Scalar>(positions: &[S], weights: &[S]) -> S {
    debug_assert_eq!(positions.len(), weights.len());
    if positions.is_empty() {
        return S::zero();
    }
    let mut f = ConcavePwl::zero();
    for (k, (&x, &s)) in positions.iter().zip(weights).enumerate() {
        if k > 0 {
            f.window_max(x - positions[k - 1]);
        }
        f.add_linear(s);
    }
    f.max_value().max(S::zero())
}
