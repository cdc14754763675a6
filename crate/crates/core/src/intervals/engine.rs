//! Exact engine for piecewise-affine maps: survivor sets, short-return sums,
//! cluster sets, recurrence sets and the blocking inequality.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::transfer::StepFunction;
use super::{IntervalSet, DEFAULT_FRAGMENT_CAP};
use crate::error::{Error, Result};
use crate::maps::{affine_preimage, AffineBranch, MapSpec, MeasureModel};
use crate::rational::{self, Q};

pub const DEFAULT_BRANCH_CAP: u64 = 1 << 26;

/// Exact survivor measures `μ(M_n ≤ u)` for the target `B = {φ ≥ u}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactLawTable {
    pub map: MapSpec,
    pub target: IntervalSet,
    pub rows: Vec<LawRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawRow {
    pub n: u64,
    #[serde(with = "crate::rational::as_string")]
    pub survivor_measure: Q,
}

/// One block term of the blocking bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaTerm {
    pub j: u64,
    /// `m = (j-1)(p+t)`
    pub m: u64,
    #[serde(with = "crate::rational::as_string")]
    pub survivor_m: Q,
    /// `Σ_{k=1}^p μ(B ∩ f^{-(p+t-k)} S_m)`
    #[serde(with = "crate::rational::as_string")]
    pub sigma: Q,
    /// `|p μ(B) μ(S_m) - Σ_j|`
    #[serde(with = "crate::rational::as_string")]
    pub mixing_term: Q,
    /// `t μ(B)`
    #[serde(with = "crate::rational::as_string")]
    pub gap_term: Q,
    /// `2p Σ_{k=1}^p μ(B ∩ f^{-k} B)`
    #[serde(with = "crate::rational::as_string")]
    pub short_return_term: Q,
    #[serde(with = "crate::rational::as_string")]
    pub gamma: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingReport {
    pub l: u64,
    pub p: u64,
    pub q: u64,
    pub r: u64,
    pub t: u64,
    #[serde(with = "crate::rational::as_string")]
    pub s: Q,
    #[serde(with = "crate::rational::as_string")]
    pub mu_target: Q,
    /// `1 - p μ(B)`
    #[serde(with = "crate::rational::as_string")]
    pub eta: Q,
    #[serde(with = "crate::rational::as_string")]
    pub survivor_l: Q,
    /// `|μ(S_l) - η^q|`
    #[serde(with = "crate::rational::as_string")]
    pub lhs: Q,
    /// `|μ(S_{q(p+t)}) - η^q|`, the quantity the block decomposition controls directly
    #[serde(with = "crate::rational::as_string")]
    pub lhs_full_blocks: Q,
    /// `Σ_j η^{q-j} Γ_j`
    #[serde(with = "crate::rational::as_string")]
    pub rhs: Q,
    pub holds: bool,
    pub holds_full_blocks: bool,
    pub gamma_terms: Vec<GammaTerm>,
}

/// `0 ≤ μ(S_r) - μ(S_{r+k}) ≤ k μ(B)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendixAReport {
    pub r: u64,
    pub k: u64,
    #[serde(with = "crate::rational::as_string")]
    pub difference: Q,
    /// `k μ(B) - difference`
    #[serde(with = "crate::rational::as_string")]
    pub slack: Q,
    pub holds: bool,
}

pub struct ExactEngine {
    map: MapSpec,
    branches: Vec<AffineBranch>,
    measure: MeasureModel,
    density: Vec<(Q, Q, Q)>,
    fragment_cap: usize,
    branch_cap: u64,
}

impl ExactEngine {
    pub fn new(map: &MapSpec, measure: &MeasureModel) -> Result<Self> {
        let branches = map.affine_branches().ok_or_else(|| {
            Error::Unsupported(format!("exact engine needs a piecewise-affine map, got {}", map.name()))
        })?;
        let density = measure.density_steps()?;
        Ok(ExactEngine {
            map: map.clone(),
            branches,
            measure: measure.clone(),
            density,
            fragment_cap: DEFAULT_FRAGMENT_CAP,
            branch_cap: DEFAULT_BRANCH_CAP,
        })
    }

    pub fn with_caps(mut self, fragment_cap: usize, branch_cap: u64) -> Self {
        self.fragment_cap = fragment_cap;
        self.branch_cap = branch_cap;
        self
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn measure(&self, set: &IntervalSet) -> Result<Q> {
        self.measure.set_mass_exact(set)
    }

    pub fn preimage(&self, set: &IntervalSet) -> Result<IntervalSet> {
        affine_preimage(&self.branches, set, self.fragment_cap)
    }

    fn complement(&self, b: &IntervalSet) -> Result<IntervalSet> {
        b.clone().with_cap(self.fragment_cap).complement()
    }

    /// `S_n = ∩_{k=0}^{n-1} f^{-k}(B^c)` as a set, built by `S_k = B^c ∩ f^{-1}(S_{k-1})`.
    pub fn survivor_set(&self, b: &IntervalSet, n: u64) -> Result<IntervalSet> {
        let bc = self.complement(b)?;
        let mut s = IntervalSet::full().with_cap(self.fragment_cap);
        for _ in 0..n {
            s = bc.intersect(&self.preimage(&s)?)?;
        }
        Ok(s)
    }

    /// `μ(S_n)` for `n = 0..=n_max` via the transfer operator.
    pub fn survivor_measures(&self, b: &IntervalSet, n_max: u64) -> Result<Vec<Q>> {
        let bc = self.complement(b)?;
        let mut out = Vec::with_capacity(n_max as usize + 1);
        out.push(Q::one());
        if n_max == 0 {
            return Ok(out);
        }
        let mut g = StepFunction::density_on(&self.density, &bc);
        out.push(g.integral());
        for _ in 1..n_max {
            g = g.push(&self.branches).restrict(&bc);
            out.push(g.integral());
        }
        Ok(out)
    }

    pub fn exact_mn_law(&self, b: &IntervalSet, n_list: &[u64]) -> Result<ExactLawTable> {
        let n_max = n_list.iter().copied().max().unwrap_or(0);
        let all = self.survivor_measures(b, n_max)?;
        let rows = n_list
            .iter()
            .map(|&n| LawRow {
                n,
                survivor_measure: all[n as usize].clone(),
            })
            .collect();
        Ok(ExactLawTable {
            map: self.map.clone(),
            target: b.clone(),
            rows,
        })
    }

    fn pushed_n(&self, mut h: StepFunction, n: u64) -> StepFunction {
        for _ in 0..n {
            h = h.push(&self.branches);
        }
        h
    }

    /// `∫ h · 1_{S_m}` for the survivor set of `B`.
    fn survive(&self, h: &StepFunction, bc: &IntervalSet, m: u64) -> Q {
        if m == 0 {
            return h.integral();
        }
        let mut g = h.restrict(bc);
        for _ in 1..m {
            g = g.push(&self.branches).restrict(bc);
        }
        g.integral()
    }

    /// `μ(W ∩ f^{-d}(S_m))`.
    pub fn joint_survivor_mass(&self, window: &IntervalSet, d: u64, b: &IntervalSet, m: u64) -> Result<Q> {
        let bc = self.complement(b)?;
        let h = self.pushed_n(StepFunction::density_on(&self.density, window), d);
        Ok(self.survive(&h, &bc, m))
    }

    /// `[μ(B ∩ f^{-j} B)]_{j=1..p}`.
    pub fn xi_terms(&self, b: &IntervalSet, p: u64) -> Result<Vec<Q>> {
        let mut h = StepFunction::density_on(&self.density, b);
        let mut out = Vec::with_capacity(p as usize);
        for _ in 0..p {
            h = h.push(&self.branches);
            out.push(h.restrict(b).integral());
        }
        Ok(out)
    }

    /// `Ξ_p = Σ_{j=1}^p μ(B ∩ f^{-j} B)`.
    pub fn exact_xi(&self, b: &IntervalSet, p: u64) -> Result<Q> {
        Ok(self.xi_terms(b, p)?.into_iter().sum())
    }

    /// Same sum computed from explicit preimage sets.
    pub fn exact_xi_by_sets(&self, b: &IntervalSet, p: u64) -> Result<Q> {
        let mut pre = b.clone().with_cap(self.fragment_cap);
        let mut total = Q::zero();
        for _ in 0..p {
            pre = self.preimage(&pre)?;
            total += self.measure(&b.intersect(&pre)?)?;
        }
        Ok(total)
    }

    /// `A^{(q)} = B ∩ ∩_{k=1}^q f^{-k}(B^c)` and `θ = μ(A^{(q)})/μ(B)`.
    pub fn exact_aq_theta(&self, b: &IntervalSet, q: u64) -> Result<(IntervalSet, Q)> {
        let mu_b = self.measure(b)?;
        if mu_b.is_zero() {
            return Err(Error::invalid("target has zero measure"));
        }
        let s_q = self.survivor_set(b, q)?;
        let a = b.intersect(&self.preimage(&s_q)?)?;
        let theta = self.measure(&a)? / mu_b;
        Ok((a, theta))
    }

    /// `μ(A^{(q)})` through the transfer operator.
    pub fn aq_measure(&self, b: &IntervalSet, q: u64) -> Result<Q> {
        self.joint_survivor_mass(b, 1, b, q)
    }

    /// Walks the composite branches of `f^n`, calling `leaf(lo, hi, slope, intercept)`.
    fn for_each_composite<F>(&self, n: u64, mut leaf: F) -> Result<()>
    where
        F: FnMut(&Q, &Q, &Q, &Q),
    {
        // full branches: f^n has exactly k^n composite branches, so fail before walking them
        let full = self.branches.iter().all(|b| b.image() == (Q::zero(), Q::one()));
        if full {
            let k = self.branches.len() as f64;
            if n as f64 * k.log2() > (self.branch_cap as f64).log2() {
                return Err(Error::BranchCap { cap: self.branch_cap });
            }
        }
        let mut leaves = 0u64;
        let mut stack: Vec<(Q, Q, Q, Q, u64)> = vec![(Q::zero(), Q::one(), Q::one(), Q::zero(), 0)];
        while let Some((lo, hi, s, c, depth)) = stack.pop() {
            if depth == n {
                leaves += 1;
                if leaves > self.branch_cap {
                    return Err(Error::BranchCap { cap: self.branch_cap });
                }
                leaf(&lo, &hi, &s, &c);
                continue;
            }
            let ya = &s * &lo + &c;
            let yb = &s * &hi + &c;
            let (ilo, ihi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
            // push in reverse so leaves come out in branch order
            for br in self.branches.iter().rev() {
                let l = ilo.clone().max(br.lo.clone());
                let h = ihi.clone().min(br.hi.clone());
                if l >= h {
                    continue;
                }
                let xa = (&l - &c) / &s;
                let xb = (&h - &c) / &s;
                let (dlo, dhi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
                let s2 = &br.slope * &s;
                let c2 = &br.slope * &c + &br.intercept;
                stack.push((dlo, dhi, s2, c2, depth + 1));
            }
        }
        Ok(())
    }

    /// `E_{r,n} = {x : |f^n(x) - x| < r}`, solved branch by branch of `f^n`.
    pub fn recurrence_set(&self, r: &Q, n: u64) -> Result<IntervalSet> {
        let mut pieces = Vec::new();
        if r.is_positive() {
            self.for_each_composite(n, |lo, hi, s, c| {
                let k = s - Q::one();
                let (a, b) = if k.is_zero() {
                    if c.abs() < *r {
                        (lo.clone(), hi.clone())
                    } else {
                        return;
                    }
                } else {
                    // |k x + c| < r
                    let x1 = (-r - c) / &k;
                    let x2 = (r - c) / &k;
                    let (x1, x2) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
                    (x1.max(lo.clone()), x2.min(hi.clone()))
                };
                if a < b {
                    pieces.push((a, b));
                }
            })?;
        }
        IntervalSet::from_intervals(pieces)
            .with_cap(self.fragment_cap)
            .check_cap()
    }

    pub fn exact_recurrence_measure(&self, r: &Q, n: u64) -> Result<Q> {
        self.measure(&self.recurrence_set(r, n)?)
    }

    pub fn blocking_report(&self, b: &IntervalSet, l: u64, s: &Q, t: u64) -> Result<BlockingReport> {
        let p = rational::floor_rational_power(l, s)?;
        if p == 0 || p > l {
            return Err(Error::invalid(format!("block length p = {p} invalid for l = {l}")));
        }
        let q = l / p;
        let r = l % p;
        let mu_b = self.measure(b)?;
        let pq = Q::from_integer(p.into());
        let eta = Q::one() - &pq * &mu_b;
        let m_last = (q - 1) * (p + t);
        let n_needed = l.max(q * (p + t)).max(m_last);
        let surv = self.survivor_measures(b, n_needed)?;
        let eta_q = num_traits::pow(eta.clone(), q as usize);
        let lhs = (&surv[l as usize] - &eta_q).abs();
        let lhs_full = (&surv[(q * (p + t)) as usize] - &eta_q).abs();

        let xi = self.exact_xi(b, p)?;
        let short_return_term = Q::from_integer((2 * p).into()) * &xi;
        let gap_term = Q::from_integer(t.into()) * &mu_b;

        let bc = self.complement(b)?;
        // h_d = L^d(ρ 1_B) for d = 0..p+t-1
        let mut h = Vec::with_capacity((p + t) as usize);
        h.push(StepFunction::density_on(&self.density, b));
        for d in 1..(p + t) {
            let next = h[(d - 1) as usize].push(&self.branches);
            h.push(next);
        }
        let mut rhs = Q::zero();
        let mut gamma_terms = Vec::with_capacity(q as usize);
        for j in 1..=q {
            let m = (j - 1) * (p + t);
            let mut sigma = Q::zero();
            for k in 1..=p {
                sigma += self.survive(&h[(p + t - k) as usize], &bc, m);
            }
            let survivor_m = surv[m as usize].clone();
            let mixing_term = (&pq * &mu_b * &survivor_m - &sigma).abs();
            let gamma = &mixing_term + &gap_term + &short_return_term;
            rhs += num_traits::pow(eta.clone(), (q - j) as usize) * &gamma;
            gamma_terms.push(GammaTerm {
                j,
                m,
                survivor_m,
                sigma,
                mixing_term,
                gap_term: gap_term.clone(),
                short_return_term: short_return_term.clone(),
                gamma,
            });
        }
        Ok(BlockingReport {
            l,
            p,
            q,
            r,
            t,
            s: s.clone(),
            mu_target: mu_b,
            eta,
            survivor_l: surv[l as usize].clone(),
            holds: lhs <= rhs,
            holds_full_blocks: lhs_full <= rhs,
            lhs,
            lhs_full_blocks: lhs_full,
            rhs,
            gamma_terms,
        })
    }

    pub fn appendix_a_check(&self, b: &IntervalSet, r: u64, k: u64) -> Result<AppendixAReport> {
        let surv = self.survivor_measures(b, r + k)?;
        let difference = &surv[r as usize] - &surv[(r + k) as usize];
        let slack = Q::from_integer(k.into()) * self.measure(b)? - &difference;
        Ok(AppendixAReport {
            r,
            k,
            holds: !difference.is_negative() && !slack.is_negative(),
            difference,
            slack,
        })
    }
}

pub fn survivor_set(map: &MapSpec, b: &IntervalSet, n: u64) -> Result<IntervalSet> {
    ExactEngine::new(map, &MeasureModel::Lebesgue)?.survivor_set(b, n)
}

pub fn exact_mn_law(map: &MapSpec, b: &IntervalSet, n_list: &[u64], measure: &MeasureModel) -> Result<ExactLawTable> {
    ExactEngine::new(map, measure)?.exact_mn_law(b, n_list)
}

pub fn exact_xi(map: &MapSpec, b: &IntervalSet, p: u64) -> Result<Q> {
    ExactEngine::new(map, &MeasureModel::Lebesgue)?.exact_xi(b, p)
}

pub fn exact_aq_theta(map: &MapSpec, b: &IntervalSet, q: u64, measure: &MeasureModel) -> Result<(IntervalSet, Q)> {
    ExactEngine::new(map, measure)?.exact_aq_theta(b, q)
}

pub fn exact_recurrence_measure(map: &MapSpec, r: &Q, n: u64) -> Result<Q> {
    ExactEngine::new(map, &MeasureModel::Lebesgue)?.exact_recurrence_measure(r, n)
}

pub fn blocking_report(
    map: &MapSpec,
    b: &IntervalSet,
    l: u64,
    s: &Q,
    t: u64,
    measure: &MeasureModel,
) -> Result<BlockingReport> {
    ExactEngine::new(map, measure)?.blocking_report(b, l, s, t)
}

pub fn appendix_a_check(
    map: &MapSpec,
    b: &IntervalSet,
    r: u64,
    k: u64,
    measure: &MeasureModel,
) -> Result<AppendixAReport> {
    ExactEngine::new(map, measure)?.appendix_a_check(b, r, k)
}

impl ExactLawTable {
    /// Columns `n,survivor_measure,decimal`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "survivor_measure", "decimal"])?;
        for row in &self.rows {
            out.write_record([
                row.n.to_string(),
                rational::fmt_q(&row.survivor_measure),
                format!("{:.17e}", rational::to_f64(&row.survivor_measure)),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl BlockingReport {
    pub const CSV_HEADER: [&'static str; 12] = [
        "l", "p", "q", "r", "t", "s", "mu_target", "lhs", "rhs", "holds", "lhs_full_blocks",
        "holds_full_blocks",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.l.to_string(),
            self.p.to_string(),
            self.q.to_string(),
            self.r.to_string(),
            self.t.to_string(),
            rational::fmt_q(&self.s),
            rational::fmt_q(&self.mu_target),
            rational::fmt_q(&self.lhs),
            rational::fmt_q(&self.rhs),
            self.holds.to_string(),
            rational::fmt_q(&self.lhs_full_blocks),
            self.holds_full_blocks.to_string(),
        ]
    }

    /// Columns `j,m,survivor_m,sigma,mixing_term,gap_term,short_return_term,gamma`.
    pub fn write_gamma_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "j", "m", "survivor_m", "sigma", "mixing_term", "gap_term", "short_return_term", "gamma",
        ])?;
        for g in &self.gamma_terms {
            out.write_record([
                g.j.to_string(),
                g.m.to_string(),
                rational::fmt_q(&g.survivor_m),
                rational::fmt_q(&g.sigma),
                rational::fmt_q(&g.mixing_term),
                rational::fmt_q(&g.gap_term),
                rational::fmt_q(&g.short_return_term),
                rational::fmt_q(&g.gamma),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn doubling() -> ExactEngine {
        ExactEngine::new(&MapSpec::doubling(), &MeasureModel::Lebesgue).unwrap()
    }

    fn set(s: &str) -> IntervalSet {
        IntervalSet::parse(s).unwrap()
    }

    #[test]
    fn survivor_examples() {
        let e = doubling();
        let b = set("0:1/4");
        assert_eq!(e.survivor_set(&b, 1).unwrap(), set("1/4:1"));
        assert_eq!(e.survivor_set(&b, 2).unwrap().lebesgue(), q(5, 8));
        let half = set("0:1/2");
        assert_eq!(e.survivor_set(&half, 3).unwrap(), set("7/8:1"));
        let law = e.exact_mn_law(&b, &[0, 1, 2]).unwrap();
        let vals: Vec<Q> = law.rows.iter().map(|r| r.survivor_measure.clone()).collect();
        assert_eq!(vals, vec![q(1, 1), q(3, 4), q(5, 8)]);
        assert_eq!(e.exact_mn_law(&half, &[3]).unwrap().rows[0].survivor_measure, q(1, 8));
    }

    #[test]
    fn xi_examples() {
        let e = doubling();
        let b = set("0:1/4");
        assert_eq!(e.exact_xi(&b, 1).unwrap(), q(1, 8));
        assert_eq!(e.exact_xi(&b, 2).unwrap(), q(1, 8) + q(1, 16));
        assert_eq!(e.exact_xi(&IntervalSet::empty(), 10).unwrap(), q(0, 1));
        assert_eq!(e.exact_xi_by_sets(&b, 5).unwrap(), e.exact_xi(&b, 5).unwrap());
    }

    #[test]
    fn theta_at_fixed_and_period_two_points() {
        let e = doubling();
        // fixed point 0: half of B leaves after one step and never comes back within m steps
        let b = set("0:1/16");
        for q_ in 1..=3 {
            let (_, theta) = e.exact_aq_theta(&b, q_).unwrap();
            assert_eq!(theta, q(1, 2));
            assert_eq!(e.aq_measure(&b, q_).unwrap(), q(1, 32));
        }
        // period-2 point 1/3: 1 - 1/4
        let r = q(1, 64);
        let b = IntervalSet::interval(q(1, 3) - &r, q(1, 3) + &r);
        let (_, theta) = e.exact_aq_theta(&b, 2).unwrap();
        assert_eq!(theta, q(3, 4));
    }

    #[test]
    fn recurrence_small_cases() {
        let e = doubling();
        assert_eq!(e.exact_recurrence_measure(&q(0, 1), 3).unwrap(), q(0, 1));
        // n = 1: |2x - x| < 1/8 on [0,1/2) gives [0,1/8); |2x-1-x| < 1/8 on [1/2,1) gives (7/8,1)
        assert_eq!(e.exact_recurrence_measure(&q(1, 8), 1).unwrap(), q(1, 4));
        assert_eq!(e.exact_recurrence_measure(&q(1, 2), 1).unwrap(), q(1, 1));
        let capped = doubling().with_caps(DEFAULT_FRAGMENT_CAP, 4);
        assert!(matches!(capped.exact_recurrence_measure(&q(1, 8), 3), Err(Error::BranchCap { .. })));
    }

    #[test]
    fn blocking_examples() {
        let e = doubling();
        let rep = e.blocking_report(&set("0:1/8"), 9, &q(1, 2), 1).unwrap();
        assert_eq!((rep.p, rep.q, rep.r), (3, 3, 0));
        assert!(rep.holds, "{rep:?}");
        let rep = e.blocking_report(&set("0:1/4"), 4, &q(1, 2), 2).unwrap();
        assert_eq!((rep.p, rep.q), (2, 2));
        let law = e.exact_mn_law(&set("0:1/4"), &[4]).unwrap();
        assert_eq!(rep.survivor_l, law.rows[0].survivor_measure);
        assert_eq!(rep.survivor_l, e.survivor_set(&set("0:1/4"), 4).unwrap().lebesgue());
        let empty = e.blocking_report(&IntervalSet::empty(), 9, &q(1, 2), 1).unwrap();
        assert_eq!(empty.lhs, q(0, 1));
        assert_eq!(empty.rhs, q(0, 1));
    }

    #[test]
    fn appendix_a_examples() {
        let e = doubling();
        let rep = e.appendix_a_check(&set("0:1/4"), 2, 1).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.difference, q(5, 8) - e.survivor_measures(&set("0:1/4"), 3).unwrap()[3].clone());
        assert_eq!(e.appendix_a_check(&set("0:1/4"), 2, 0).unwrap().difference, q(0, 1));
        let all = e.appendix_a_check(&IntervalSet::full(), 3, 2).unwrap();
        assert_eq!(all.difference, q(0, 1));
    }

    #[test]
    fn non_affine_maps_are_rejected() {
        assert!(matches!(
            ExactEngine::new(&MapSpec::gauss(), &MeasureModel::Lebesgue),
            Err(Error::Unsupported(_))
        ));
        assert!(ExactEngine::new(&MapSpec::doubling(), &MeasureModel::Gauss).is_err());
    }
}
