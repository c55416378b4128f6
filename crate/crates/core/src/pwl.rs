//! Exact piecewise-linear and piecewise-constant functions of rational time.
//!
//! Every time-indexed quantity of a flow over time (cumulative flows, labels,
//! queues, rates) is one of these two shapes. Both types are kept canonical:
//! breakpoints are strictly increasing and redundant ones are merged away, so
//! structural equality is functional equality.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{self, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PwlError {
    #[error("a piecewise-linear function needs at least one breakpoint")]
    NoBreakpoints,
    #[error("breakpoints must be strictly increasing (index {0})")]
    NotIncreasing(usize),
}

/// Continuous piecewise-linear function. Left of the first breakpoint it
/// continues with `left_slope`, right of the last with `right_slope`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseLinear {
    points: Vec<(Q, Q)>,
    /// `slopes[0]` left of the first breakpoint, `slopes[i + 1]` right of breakpoint `i`.
    slopes: Vec<Q>,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(Q, Q)>, left_slope: Q, right_slope: Q) -> Result<Self, PwlError> {
        if points.is_empty() {
            return Err(PwlError::NoBreakpoints);
        }
        if let Some(i) = points.windows(2).position(|w| w[0].0 >= w[1].0) {
            return Err(PwlError::NotIncreasing(i + 1));
        }
        let mut slopes = Vec::with_capacity(points.len() + 1);
        slopes.push(left_slope);
        for w in points.windows(2) {
            slopes.push((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0));
        }
        slopes.push(right_slope);
        let mut f = PiecewiseLinear { points, slopes };
        f.canonicalize();
        Ok(f)
    }

    /// Function through `points` that is constant to the left of the first
    /// breakpoint and continues with `final_slope` after the last one.
    pub fn with_final_slope(points: Vec<(Q, Q)>, final_slope: Q) -> Result<Self, PwlError> {
        Self::new(points, Q::zero(), final_slope)
    }

    pub fn constant(value: Q) -> Self {
        PiecewiseLinear {
            points: vec![(Q::zero(), value)],
            slopes: vec![Q::zero(), Q::zero()],
        }
    }

    /// The full line through `(t0, v0)` with the given slope.
    pub fn line(t0: Q, v0: Q, slope: Q) -> Self {
        PiecewiseLinear {
            points: vec![(t0, v0)],
            slopes: vec![slope.clone(), slope],
        }
    }

    /// Constant `v0` up to `t0`, then slope `slope`.
    pub fn ray(t0: Q, v0: Q, slope: Q) -> Self {
        Self::new(vec![(t0, v0)], Q::zero(), slope).expect("single breakpoint")
    }

    pub fn identity() -> Self {
        Self::line(Q::zero(), Q::zero(), num::one())
    }

    pub fn points(&self) -> &[(Q, Q)] {
        &self.points
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = &Q> + '_ {
        self.points.iter().map(|(t, _)| t)
    }

    pub fn left_slope(&self) -> &Q {
        &self.slopes[0]
    }

    pub fn right_slope(&self) -> &Q {
        &self.slopes[self.points.len()]
    }

    pub fn first_breakpoint(&self) -> &Q {
        &self.points[0].0
    }

    pub fn last_breakpoint(&self) -> &Q {
        &self.points[self.points.len() - 1].0
    }

    fn canonicalize(&mut self) {
        // breakpoint i is redundant when the slopes on both sides agree
        let mut keep: Vec<bool> = (0..self.points.len()).map(|i| self.slopes[i] != self.slopes[i + 1]).collect();
        if keep.iter().all(|k| !k) {
            keep[0] = true;
        }
        let mut slopes = vec![self.slopes[0].clone()];
        let mut idx = 0;
        self.points.retain(|_| {
            let k = keep[idx];
            idx += 1;
            if k {
                slopes.push(self.slopes[idx].clone());
            }
            k
        });
        self.slopes = slopes;
    }

    /// Slope between breakpoint `i` and `i + 1`.
    fn segment_slope(&self, i: usize) -> Q {
        self.slopes[i + 1].clone()
    }

    /// Index of the last breakpoint `<= t`, or `None` left of the first one.
    fn locate(&self, t: &Q) -> Option<usize> {
        match self.points.binary_search_by(|(bt, _)| bt.cmp(t)) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }

    pub fn eval(&self, t: &Q) -> Q {
        match self.locate(t) {
            None => {
                let (t0, v0) = &self.points[0];
                v0 + &self.slopes[0] * (t - t0)
            }
            Some(i) => {
                let (ti, vi) = &self.points[i];
                vi + &self.slopes[i + 1] * (t - ti)
            }
        }
    }

    /// Right derivative at `t`.
    pub fn slope_after(&self, t: &Q) -> Q {
        match self.locate(t) {
            None => self.left_slope().clone(),
            Some(i) if i + 1 == self.points.len() => self.right_slope().clone(),
            Some(i) => self.segment_slope(i),
        }
    }

    /// Left derivative at `t`.
    pub fn slope_before(&self, t: &Q) -> Q {
        match self.points.binary_search_by(|(bt, _)| bt.cmp(t)) {
            Ok(0) | Err(0) => self.left_slope().clone(),
            Ok(i) => self.segment_slope(i - 1),
            Err(i) if i == self.points.len() => self.right_slope().clone(),
            Err(i) => self.segment_slope(i - 1),
        }
    }

    /// Slopes of the pieces: left ray, inner segments, right ray.
    fn all_slopes(&self) -> &[Q] {
        &self.slopes
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.all_slopes().iter().all(|s| !s.is_negative())
    }

    pub fn is_nondecreasing_from(&self, from: &Q) -> bool {
        if self.slope_after(from).is_negative() {
            return false;
        }
        let n = self.points.len();
        (0..n).all(|i| {
            let after = if i + 1 == n {
                self.right_slope().clone()
            } else {
                self.segment_slope(i)
            };
            let end_before_from = i + 1 < n && &self.points[i + 1].0 <= from;
            end_before_from || !after.is_negative()
        })
    }

    /// Applies `op` pointwise to two functions. Only exact for operations that
    /// keep linear pieces linear (sums and scalings).
    fn combine(&self, other: &Self, op: impl Fn(&Q, &Q) -> Q) -> Self {
        let mut ts: Vec<Q> = self.breakpoints().chain(other.breakpoints()).cloned().collect();
        ts.sort();
        ts.dedup();
        let points = ts
            .into_iter()
            .map(|t| {
                let v = op(&self.eval(&t), &other.eval(&t));
                (t, v)
            })
            .collect();
        let left = op(self.left_slope(), other.left_slope());
        let right = op(self.right_slope(), other.right_slope());
        Self::new(points, left, right).expect("merged breakpoints are sorted")
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, k: &Q) -> Self {
        let points = self.points.iter().map(|(t, v)| (t.clone(), v * k)).collect();
        Self::new(points, self.left_slope() * k, self.right_slope() * k).expect("same breakpoints")
    }

    pub fn add_constant(&self, c: &Q) -> Self {
        let points = self.points.iter().map(|(t, v)| (t.clone(), v + c)).collect();
        PiecewiseLinear {
            points,
            slopes: self.slopes.clone(),
        }
    }

    /// `θ ↦ f(θ - delay)`.
    pub fn shift(&self, delay: &Q) -> Self {
        let points = self.points.iter().map(|(t, v)| (t + delay, v.clone())).collect();
        PiecewiseLinear {
            points,
            slopes: self.slopes.clone(),
        }
    }

    /// `self ∘ inner` for a nondecreasing `inner`.
    ///
    /// Breakpoints of the result are the breakpoints of `inner` together with
    /// the preimages under `inner` of the breakpoints of `self`.
    pub fn compose(&self, inner: &PiecewiseLinear) -> PiecewiseLinear {
        debug_assert!(inner.is_nondecreasing(), "inner function must be nondecreasing");
        let mut ts: Vec<Q> = inner.breakpoints().cloned().collect();
        let slopes = inner.all_slopes();
        let n = inner.points.len();
        for (bt, _) in &self.points {
            // piece k covers (-inf, t0] for k = 0, [t_{k-1}, t_k] inside, [t_{n-1}, inf) for k = n
            for (k, slope) in slopes.iter().enumerate() {
                if !slope.is_positive() {
                    continue;
                }
                let (anchor_t, anchor_v) = if k == 0 {
                    &inner.points[0]
                } else {
                    &inner.points[k - 1]
                };
                let pre = anchor_t + (bt - anchor_v) / slope;
                let inside = match k {
                    0 => &pre <= anchor_t,
                    k if k == n => &pre >= anchor_t,
                    k => &pre >= anchor_t && pre <= inner.points[k].0,
                };
                if inside {
                    ts.push(pre);
                }
            }
        }
        ts.sort();
        ts.dedup();
        let points = ts
            .into_iter()
            .map(|t| {
                let v = self.eval(&inner.eval(&t));
                (t, v)
            })
            .collect::<Vec<_>>();
        let left = if inner.left_slope().is_positive() {
            self.left_slope() * inner.left_slope()
        } else {
            Q::zero()
        };
        let right = if inner.right_slope().is_positive() {
            self.right_slope() * inner.right_slope()
        } else {
            Q::zero()
        };
        Self::new(points, left, right).expect("sorted breakpoints")
    }

    fn min2(&self, other: &Self) -> Self {
        let mut ts: Vec<Q> = self.breakpoints().chain(other.breakpoints()).cloned().collect();
        ts.sort();
        ts.dedup();
        let mut extra = Vec::new();
        let diff = self.sub(other);
        // zeros of the difference strictly inside pieces
        extra.extend(diff.level_points(&Q::zero()));
        ts.extend(extra);
        ts.sort();
        ts.dedup();
        let first = ts[0].clone();
        let last = ts[ts.len() - 1].clone();
        let points = ts
            .into_iter()
            .map(|t| {
                let a = self.eval(&t);
                let b = other.eval(&t);
                (t, num::min_q(&a, &b).clone())
            })
            .collect();
        let one = num::one();
        let probe_l = &first - &one;
        let left = if self.eval(&probe_l) <= other.eval(&probe_l) {
            self.left_slope().clone()
        } else {
            other.left_slope().clone()
        };
        let probe_r = &last + &one;
        let right = if self.eval(&probe_r) <= other.eval(&probe_r) {
            self.right_slope().clone()
        } else {
            other.right_slope().clone()
        };
        Self::new(points, left, right).expect("sorted breakpoints")
    }

    /// Exact lower envelope of a nonempty family.
    pub fn pointwise_min(fs: &[PiecewiseLinear]) -> Option<PiecewiseLinear> {
        let (first, rest) = fs.split_first()?;
        Some(rest.iter().fold(first.clone(), |acc, f| acc.min2(f)))
    }

    /// Points where the function equals `level` on a non-constant piece
    /// (isolated crossings or touches).
    pub fn level_points(&self, level: &Q) -> Vec<Q> {
        let mut out = Vec::new();
        let slopes = self.all_slopes();
        let n = self.points.len();
        for (k, slope) in slopes.iter().enumerate() {
            if slope.is_zero() {
                continue;
            }
            let (at, av) = if k == 0 {
                &self.points[0]
            } else {
                &self.points[k - 1]
            };
            let t = at + (level - av) / slope;
            let inside = match k {
                0 => &t <= at,
                k if k == n => &t >= at,
                k => &t >= at && t <= self.points[k].0,
            };
            if inside {
                out.push(t);
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Least `θ >= from` with `f(θ) >= level`, or `None` if the level is never reached.
    pub fn first_crossing(&self, level: &Q, from: &Q) -> Option<Q> {
        if &self.eval(from) >= level {
            return Some(from.clone());
        }
        // walk the pieces that start at or after `from`
        let mut start = from.clone();
        let mut start_val = self.eval(from);
        let first_later = self.locate(from).map_or(0, |i| i + 1);
        for (t, v) in &self.points[first_later..] {
            if v >= level {
                // crossing inside [start, t]; the piece is linear there
                let slope = (v - &start_val) / (t - &start);
                return Some(&start + (level - &start_val) / slope);
            }
            start = t.clone();
            start_val = v.clone();
        }
        let slope = self.slope_after(&start);
        if slope.is_positive() {
            Some(&start + (level - &start_val) / slope)
        } else {
            None
        }
    }
}

/// Right-continuous step function: `left` before the first step, then the
/// value of step `i` on `[t_i, t_{i+1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseConstant {
    left: Q,
    steps: Vec<(Q, Q)>,
}

impl PiecewiseConstant {
    pub fn new(left: Q, steps: Vec<(Q, Q)>) -> Result<Self, PwlError> {
        if let Some(i) = steps.windows(2).position(|w| w[0].0 >= w[1].0) {
            return Err(PwlError::NotIncreasing(i + 1));
        }
        let mut f = PiecewiseConstant { left, steps };
        f.canonicalize();
        Ok(f)
    }

    pub fn constant(value: Q) -> Self {
        PiecewiseConstant {
            left: value,
            steps: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(Q::zero())
    }

    fn canonicalize(&mut self) {
        let mut out: Vec<(Q, Q)> = Vec::with_capacity(self.steps.len());
        for (t, v) in self.steps.drain(..) {
            let prev = out.last().map(|(_, pv)| pv).unwrap_or(&self.left);
            if *prev != v {
                out.push((t, v));
            }
        }
        self.steps = out;
    }

    pub fn left_value(&self) -> &Q {
        &self.left
    }

    pub fn steps(&self) -> &[(Q, Q)] {
        &self.steps
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = &Q> + '_ {
        self.steps.iter().map(|(t, _)| t)
    }

    /// Right-continuous value at `t`.
    pub fn eval(&self, t: &Q) -> &Q {
        match self.steps.binary_search_by(|(bt, _)| bt.cmp(t)) {
            Ok(i) => &self.steps[i].1,
            Err(0) => &self.left,
            Err(i) => &self.steps[i - 1].1,
        }
    }

    /// Left limit at `t`.
    pub fn left_limit(&self, t: &Q) -> &Q {
        match self.steps.binary_search_by(|(bt, _)| bt.cmp(t)) {
            Ok(0) | Err(0) => &self.left,
            Ok(i) | Err(i) => &self.steps[i - 1].1,
        }
    }

    /// Final value (after the last breakpoint).
    pub fn final_value(&self) -> &Q {
        self.steps.last().map(|(_, v)| v).unwrap_or(&self.left)
    }

    /// First breakpoint strictly after `t`; the value changes there.
    pub fn next_change_after(&self, t: &Q) -> Option<&Q> {
        self.breakpoints().find(|bt| *bt > t)
    }

    pub fn scale(&self, k: &Q) -> Self {
        let steps = self.steps.iter().map(|(t, v)| (t.clone(), v * k)).collect();
        Self::new(&self.left * k, steps).expect("same breakpoints")
    }

    /// `θ ↦ f(θ - delay)`.
    pub fn shift(&self, delay: &Q) -> Self {
        PiecewiseConstant {
            left: self.left.clone(),
            steps: self.steps.iter().map(|(t, v)| (t + delay, v.clone())).collect(),
        }
    }

    /// `∫_anchor^θ f`, negative for `θ < anchor`.
    pub fn integral(&self, anchor: &Q) -> PiecewiseLinear {
        if self.steps.is_empty() {
            return PiecewiseLinear::line(anchor.clone(), Q::zero(), self.left.clone());
        }
        let mut points = Vec::with_capacity(self.steps.len());
        let mut acc = Q::zero();
        let mut prev_t = self.steps[0].0.clone();
        let mut prev_v = self.steps[0].1.clone();
        points.push((prev_t.clone(), acc.clone()));
        for (t, v) in &self.steps[1..] {
            acc += &prev_v * (t - &prev_t);
            points.push((t.clone(), acc.clone()));
            prev_t = t.clone();
            prev_v = v.clone();
        }
        let f = PiecewiseLinear::new(points, self.left.clone(), prev_v).expect("sorted steps");
        let offset = f.eval(anchor);
        f.add_constant(&-offset)
    }
}

/// Serialized table row for a piecewise-linear function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearTable {
    pub breakpoints: Vec<LinearRow>,
    #[serde(with = "num::serde_q")]
    pub left_slope: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearRow {
    #[serde(with = "num::serde_q")]
    pub time: Q,
    #[serde(with = "num::serde_q")]
    pub value: Q,
    /// Slope on the piece starting at `time`.
    #[serde(with = "num::serde_q")]
    pub slope: Q,
}

impl From<&PiecewiseLinear> for LinearTable {
    fn from(f: &PiecewiseLinear) -> Self {
        let breakpoints = f
            .points
            .iter()
            .map(|(t, v)| LinearRow {
                time: t.clone(),
                value: v.clone(),
                slope: f.slope_after(t),
            })
            .collect();
        LinearTable {
            breakpoints,
            left_slope: f.left_slope().clone(),
        }
    }
}

impl TryFrom<&LinearTable> for PiecewiseLinear {
    type Error = PwlError;

    fn try_from(t: &LinearTable) -> Result<Self, Self::Error> {
        let right = t
            .breakpoints
            .last()
            .map(|r| r.slope.clone())
            .ok_or(PwlError::NoBreakpoints)?;
        let points = t
            .breakpoints
            .iter()
            .map(|r| (r.time.clone(), r.value.clone()))
            .collect();
        PiecewiseLinear::new(points, t.left_slope.clone(), right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantTable {
    #[serde(with = "num::serde_q")]
    pub left: Q,
    pub steps: Vec<ConstantRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantRow {
    #[serde(with = "num::serde_q")]
    pub time: Q,
    #[serde(with = "num::serde_q")]
    pub value: Q,
}

impl From<&PiecewiseConstant> for ConstantTable {
    fn from(f: &PiecewiseConstant) -> Self {
        ConstantTable {
            left: f.left.clone(),
            steps: f
                .steps
                .iter()
                .map(|(t, v)| ConstantRow {
                    time: t.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&ConstantTable> for PiecewiseConstant {
    type Error = PwlError;

    fn try_from(t: &ConstantTable) -> Result<Self, Self::Error> {
        PiecewiseConstant::new(
            t.left.clone(),
            t.steps.iter().map(|r| (r.time.clone(), r.value.clone())).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};

    fn pl(points: &[(i64, i64)], final_slope: i64) -> PiecewiseLinear {
        PiecewiseLinear::with_final_slope(
            points.iter().map(|&(t, v)| (int(t), int(v))).collect(),
            int(final_slope),
        )
        .unwrap()
    }

    #[test]
    fn eval_single_segment() {
        let f = PiecewiseLinear::ray(int(0), int(0), int(3));
        assert_eq!(f.eval(&int(2)), int(6));
        assert_eq!(f.eval(&int(-5)), int(0));
    }

    #[test]
    fn eval_two_slopes() {
        // 2 + 3θ until θ = 3, then slope 1
        let f = pl(&[(0, 2), (3, 11)], 1);
        assert_eq!(f.eval(&int(3)), int(11));
        assert_eq!(f.eval(&ratio(3, 2)), ratio(13, 2));
        assert_eq!(f.eval(&int(5)), int(13));
        assert_eq!(f.slope_before(&int(3)), int(3));
        assert_eq!(f.slope_after(&int(3)), int(1));
    }

    #[test]
    fn cumulative_is_zero_before_origin() {
        let rate = PiecewiseConstant::new(int(0), vec![(int(0), int(3))]).unwrap();
        let cum = rate.integral(&int(0));
        assert_eq!(cum.eval(&int(-4)), int(0));
        assert_eq!(cum.eval(&int(2)), int(6));
    }

    #[test]
    fn canonical_merges_collinear() {
        let f = pl(&[(0, 0), (1, 2), (2, 4)], 2);
        assert_eq!(f.points().len(), 1);
        assert_eq!(f, pl(&[(0, 0), (2, 4)], 2));
        assert_eq!(f.eval(&int(5)), int(10));
    }

    #[test]
    fn rejects_unsorted() {
        let err = PiecewiseLinear::with_final_slope(vec![(int(1), int(0)), (int(1), int(1))], int(0));
        assert_eq!(err, Err(PwlError::NotIncreasing(1)));
    }

    #[test]
    fn compose_identity_and_constant() {
        let f = pl(&[(0, 2), (3, 11)], 1);
        assert_eq!(f.compose(&PiecewiseLinear::identity()), f);
        let g = PiecewiseLinear::constant(int(3));
        assert_eq!(f.compose(&g), PiecewiseLinear::constant(int(11)));
    }

    #[test]
    fn compose_inserts_preimages() {
        // f has a kink at 4, g = θ + 1
        let f = pl(&[(0, 0), (4, 4)], 3);
        let g = PiecewiseLinear::line(int(0), int(1), int(1));
        let h = f.compose(&g);
        assert_eq!(h.eval(&int(3)), int(4));
        assert_eq!(h.eval(&int(5)), int(10));
        assert!(h.breakpoints().any(|t| *t == int(3)));
    }

    #[test]
    fn min_crossing() {
        let a = PiecewiseLinear::line(int(0), int(2), int(3));
        let b = PiecewiseLinear::line(int(0), int(8), int(1));
        let m = PiecewiseLinear::pointwise_min(&[a.clone(), b.clone()]).unwrap();
        assert!(m.breakpoints().any(|t| *t == int(3)));
        assert_eq!(m.eval(&int(3)), int(11));
        assert_eq!(m.eval(&int(0)), int(2));
        assert_eq!(m.eval(&int(10)), int(18));
        assert_eq!(PiecewiseLinear::pointwise_min(&[a.clone(), a.clone()]).unwrap(), a);
        assert_eq!(PiecewiseLinear::pointwise_min(std::slice::from_ref(&b)).unwrap(), b);
    }

    #[test]
    fn first_crossing_cases() {
        let f = pl(&[(0, 0), (2, 4)], 1);
        assert_eq!(f.first_crossing(&int(5), &int(0)), Some(int(3)));
        assert_eq!(f.first_crossing(&int(2), &int(0)), Some(int(1)));
        assert_eq!(f.first_crossing(&int(0), &int(0)), Some(int(0)));
        let c = PiecewiseLinear::constant(int(1));
        assert_eq!(c.first_crossing(&int(2), &int(0)), None);
    }

    #[test]
    fn step_function_limits() {
        let f = PiecewiseConstant::new(int(0), vec![(int(1), int(3)), (int(4), int(1))]).unwrap();
        assert_eq!(f.eval(&int(1)), &int(3));
        assert_eq!(f.left_limit(&int(1)), &int(0));
        assert_eq!(f.eval(&int(4)), &int(1));
        assert_eq!(f.left_limit(&int(4)), &int(3));
        assert_eq!(f.next_change_after(&int(1)), Some(&int(4)));
        assert_eq!(f.next_change_after(&int(4)), None);
    }

    #[test]
    fn table_round_trip() {
        let f = pl(&[(0, 2), (3, 11)], 1);
        let t = LinearTable::from(&f);
        assert_eq!(PiecewiseLinear::try_from(&t).unwrap(), f);
    }
}
