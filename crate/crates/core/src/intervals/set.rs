//! Finite unions of half-open rational intervals inside `[0, 1]`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

pub const DEFAULT_FRAGMENT_CAP: usize = 10_000_000;

/// Sorted, disjoint, non-touching half-open intervals `[a_i, b_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSet {
    #[serde(with = "crate::rational::wire_pairs")]
    intervals: Vec<(Q, Q)>,
    fragment_cap: usize,
}

impl Default for IntervalSet {
    fn default() -> Self {
        IntervalSet::empty()
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet {
            intervals: Vec::new(),
            fragment_cap: DEFAULT_FRAGMENT_CAP,
        }
    }

    pub fn full() -> Self {
        IntervalSet::interval(Q::zero(), Q::one())
    }

    /// `[a, b) ∩ [0, 1]`.
    pub fn interval(a: Q, b: Q) -> Self {
        let a = a.max(Q::zero());
        let b = b.min(Q::one());
        let intervals = if a < b { vec![(a, b)] } else { Vec::new() };
        IntervalSet {
            intervals,
            fragment_cap: DEFAULT_FRAGMENT_CAP,
        }
    }

    /// Normalizes an arbitrary list of pieces (unsorted, overlapping, empty pieces allowed).
    pub fn from_intervals(mut pieces: Vec<(Q, Q)>) -> Self {
        pieces.retain(|(a, b)| a < b);
        pieces.sort_by(|x, y| x.0.cmp(&y.0));
        Self::from_sorted(pieces)
    }

    /// Like `from_intervals` for pieces already sorted by left endpoint.
    pub fn from_sorted(pieces: Vec<(Q, Q)>) -> Self {
        let zero = Q::zero();
        let one = Q::one();
        let mut out: Vec<(Q, Q)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            let a = if a < zero { zero.clone() } else { a };
            let b = if b > one { one.clone() } else { b };
            if a >= b {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if a <= last.1 {
                    if b > last.1 {
                        last.1 = b;
                    }
                    continue;
                }
            }
            out.push((a, b));
        }
        IntervalSet {
            intervals: out,
            fragment_cap: DEFAULT_FRAGMENT_CAP,
        }
    }

    /// Parses `a:b` pieces separated by commas, e.g. `0:1/4,1/2:5/8`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (a, b) = part
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected a:b interval, got {part:?}")))?;
            let a = rational::parse_rational(a)?;
            let b = rational::parse_rational(b)?;
            if a > b || a < Q::zero() || b > Q::one() {
                return Err(Error::invalid(format!("interval {part:?} is not inside [0,1]")));
            }
            pieces.push((a, b));
        }
        Ok(IntervalSet::from_intervals(pieces))
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.fragment_cap = cap;
        self
    }

    pub fn fragment_cap(&self) -> usize {
        self.fragment_cap
    }

    pub fn check_cap(self) -> Result<Self> {
        if self.intervals.len() > self.fragment_cap {
            Err(Error::FragmentCap {
                cap: self.fragment_cap,
            })
        } else {
            Ok(self)
        }
    }

    pub fn intervals(&self) -> &[(Q, Q)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn lebesgue(&self) -> Q {
        let mut total = Q::zero();
        for (a, b) in &self.intervals {
            total += b - a;
        }
        total
    }

    pub fn contains(&self, x: &Q) -> bool {
        let idx = self.intervals.partition_point(|(a, _)| a <= x);
        idx > 0 && x < &self.intervals[idx - 1].1
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.intervals
            .iter()
            .any(|(a, b)| rational::to_f64(a) <= x && x < rational::to_f64(b))
    }

    /// Float copy of the endpoints for fast membership tests in simulations.
    pub fn to_f64_pairs(&self) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .map(|(a, b)| (rational::to_f64(a), rational::to_f64(b)))
            .collect()
    }

    /// Indices of pieces meeting `[lo, hi)`.
    pub fn overlapping(&self, lo: &Q, hi: &Q) -> std::ops::Range<usize> {
        let start = self.intervals.partition_point(|(_, b)| b <= lo);
        let end = self.intervals.partition_point(|(a, _)| a < hi);
        start..end.max(start)
    }

    pub fn union(&self, other: &IntervalSet) -> Result<IntervalSet> {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_left = j >= other.len()
                || (i < self.len() && self.intervals[i].0 <= other.intervals[j].0);
            if take_left {
                merged.push(self.intervals[i].clone());
                i += 1;
            } else {
                merged.push(other.intervals[j].clone());
                j += 1;
            }
        }
        IntervalSet::from_sorted(merged)
            .with_cap(self.fragment_cap.min(other.fragment_cap))
            .check_cap()
    }

    pub fn intersect(&self, other: &IntervalSet) -> Result<IntervalSet> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            let (a1, b1) = &self.intervals[i];
            let (a2, b2) = &other.intervals[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        let set = IntervalSet {
            intervals: out,
            fragment_cap: self.fragment_cap.min(other.fragment_cap),
        };
        set.check_cap()
    }

    /// Complement inside `[0, 1)`.
    pub fn complement(&self) -> Result<IntervalSet> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut prev = Q::zero();
        for (a, b) in &self.intervals {
            if &prev < a {
                out.push((prev.clone(), a.clone()));
            }
            prev = b.clone();
        }
        if prev < Q::one() {
            out.push((prev, Q::one()));
        }
        IntervalSet {
            intervals: out,
            fragment_cap: self.fragment_cap,
        }
        .check_cap()
    }

    pub fn difference(&self, other: &IntervalSet) -> Result<IntervalSet> {
        self.intersect(&other.complement()?)
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.intervals.iter().all(|(a, b)| {
            let idx = other.intervals.partition_point(|(c, _)| c <= a);
            idx > 0 && &other.intervals[idx - 1].1 >= b
        })
    }

    /// Endpoints as `p/q` strings.
    pub fn describe(&self) -> String {
        if self.is_empty() {
            return "{}".to_string();
        }
        self.intervals
            .iter()
            .map(|(a, b)| format!("[{},{})", rational::fmt_q(a), rational::fmt_q(b)))
            .collect::<Vec<_>>()
            .join(" u ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn iv(a: (i64, i64), b: (i64, i64)) -> IntervalSet {
        IntervalSet::interval(q(a.0, a.1), q(b.0, b.1))
    }

    #[test]
    fn complement_of_quarter() {
        let s = iv((0, 1), (1, 4));
        let c = s.complement().unwrap();
        assert_eq!(c, iv((1, 4), (1, 1)));
        assert_eq!(c.lebesgue(), q(3, 4));
    }

    #[test]
    fn union_measure() {
        let s = iv((0, 1), (1, 4)).union(&iv((1, 2), (5, 8))).unwrap();
        assert_eq!(s.lebesgue(), q(3, 8));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn intersection() {
        let s = iv((0, 1), (1, 4)).intersect(&iv((1, 8), (1, 2))).unwrap();
        assert_eq!(s, iv((1, 8), (1, 4)));
        assert_eq!(s.lebesgue(), q(1, 8));
    }

    #[test]
    fn touching_pieces_merge() {
        let s = IntervalSet::from_intervals(vec![(q(1, 4), q(1, 2)), (q(0, 1), q(1, 4))]);
        assert_eq!(s, iv((0, 1), (1, 2)));
    }

    #[test]
    fn parse_and_contains() {
        let s = IntervalSet::parse("0:1/4,1/2:5/8").unwrap();
        assert!(s.contains(&q(1, 8)));
        assert!(!s.contains(&q(1, 4)));
        assert!(s.contains(&q(1, 2)));
        assert!(IntervalSet::parse("1/2:2").is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let a = IntervalSet::from_intervals(vec![(q(0, 1), q(1, 8)), (q(1, 4), q(3, 8))]).with_cap(1);
        assert!(matches!(a.complement(), Err(Error::FragmentCap { cap: 1 })));
    }

    #[test]
    fn overlapping_range() {
        let s = IntervalSet::parse("0:1/8,1/4:3/8,1/2:5/8").unwrap();
        assert_eq!(s.overlapping(&q(1, 8), &q(1, 2)), 1..2);
        assert_eq!(s.overlapping(&q(0, 1), &q(1, 1)), 0..3);
        assert!(s.overlapping(&q(3, 8), &q(1, 2)).is_empty());
    }
}
