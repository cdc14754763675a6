//! Piecewise-constant densities and their exact push-forward under affine branches.
//!
//! For `h ∈ L¹` and a piecewise-affine map, `∫ h · (u ∘ f) = ∫ (L h) · u` with
//! `(L h)(y) = Σ_i h(φ_i(y)) / |s_i|` over the inverse branches `φ_i`. Step functions
//! stay step functions under `L`, so joint events such as `B ∩ f^{-d}(S_m)` can be
//! measured without enumerating the exponentially many cylinders of `S_m`.

use num_traits::{Signed, Zero};

use super::IntervalSet;
use crate::maps::AffineBranch;
use crate::rational::Q;

/// Non-zero pieces `(lo, hi, value)`, sorted and disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StepFunction {
    pieces: Vec<(Q, Q, Q)>,
}

impl StepFunction {
    pub fn zero() -> Self {
        StepFunction { pieces: Vec::new() }
    }

    /// `density · 1_set`.
    pub fn density_on(density: &[(Q, Q, Q)], set: &IntervalSet) -> Self {
        let mut pieces = Vec::new();
        for (a, b) in set.intervals() {
            for (lo, hi, d) in density {
                let l = a.max(lo);
                let h = b.min(hi);
                if l < h && !d.is_zero() {
                    pieces.push((l.clone(), h.clone(), d.clone()));
                }
            }
        }
        pieces.sort_by(|x, y| x.0.cmp(&y.0));
        StepFunction::merged(pieces)
    }

    fn merged(pieces: Vec<(Q, Q, Q)>) -> Self {
        let mut out: Vec<(Q, Q, Q)> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if let Some(last) = out.last_mut() {
                if last.1 == p.0 && last.2 == p.2 {
                    last.1 = p.1;
                    continue;
                }
            }
            out.push(p);
        }
        StepFunction { pieces: out }
    }

    pub fn pieces(&self) -> &[(Q, Q, Q)] {
        &self.pieces
    }

    pub fn integral(&self) -> Q {
        let mut total = Q::zero();
        for (a, b, v) in &self.pieces {
            total += (b - a) * v;
        }
        total
    }

    /// `h · 1_set`.
    pub fn restrict(&self, set: &IntervalSet) -> Self {
        let mut out = Vec::new();
        let ivs = set.intervals();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < ivs.len() {
            let (a1, b1, v) = &self.pieces[i];
            let (a2, b2) = &ivs[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo < hi {
                out.push((lo.clone(), hi.clone(), v.clone()));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        StepFunction::merged(out)
    }

    /// Transfer operator `L h` for the given branches.
    pub fn push(&self, branches: &[AffineBranch]) -> Self {
        let mut events: Vec<(Q, Q)> = Vec::with_capacity(4 * self.pieces.len());
        for br in branches {
            let inv = br.slope.abs().recip();
            let start = self.pieces.partition_point(|p| p.1 <= br.lo);
            for (a, b, v) in &self.pieces[start..] {
                if a >= &br.hi {
                    break;
                }
                let l = a.max(&br.lo);
                let h = b.min(&br.hi);
                if l >= h {
                    continue;
                }
                let (ya, yb) = {
                    let ya = br.apply(l);
                    let yb = br.apply(h);
                    if ya <= yb {
                        (ya, yb)
                    } else {
                        (yb, ya)
                    }
                };
                let w = v * &inv;
                events.push((ya, w.clone()));
                events.push((yb, -w));
            }
        }
        events.sort_by(|x, y| x.0.cmp(&y.0));
        let mut pieces = Vec::new();
        let mut level = Q::zero();
        let mut idx = 0;
        while idx < events.len() {
            let pos = events[idx].0.clone();
            while idx < events.len() && events[idx].0 == pos {
                level += &events[idx].1;
                idx += 1;
            }
            if idx < events.len() && !level.is_zero() {
                let next = events[idx].0.clone();
                pieces.push((pos, next, level.clone()));
            }
        }
        StepFunction::merged(pieces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapSpec;
    use crate::rational::{q, qi};

    #[test]
    fn lebesgue_is_fixed_by_doubling() {
        let br = MapSpec::doubling().affine_branches().unwrap();
        let one = vec![(q(0, 1), q(1, 1), qi(1))];
        let h = StepFunction::density_on(&one, &IntervalSet::full());
        assert_eq!(h.push(&br), h);
    }

    #[test]
    fn pushed_indicator_spreads() {
        let br = MapSpec::doubling().affine_branches().unwrap();
        let one = vec![(q(0, 1), q(1, 1), qi(1))];
        let h = StepFunction::density_on(&one, &IntervalSet::parse("0:1/4").unwrap());
        let lh = h.push(&br);
        assert_eq!(lh.pieces(), &[(q(0, 1), q(1, 2), q(1, 2))]);
        assert_eq!(lh.integral(), q(1, 4));
        // ∫ L(1_B) 1_B = μ(B ∩ f^{-1}B) = 1/8
        assert_eq!(lh.restrict(&IntervalSet::parse("0:1/4").unwrap()).integral(), q(1, 8));
    }
}
