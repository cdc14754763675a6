//! Invariant-measure models and the tail-mass to radius inversion.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{BallSide, MapSpec, Observable};
use crate::error::{Error, Result};
use crate::intervals::IntervalSet;
use crate::rational::{self, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureModel {
    Lebesgue,
    /// density `1 / ((1 + x) log 2)`
    Gauss,
    /// density `density[i]` on `[breaks[i], breaks[i+1])`
    PiecewiseConstant {
        #[serde(with = "crate::rational::wire_vec")]
        breaks: Vec<Q>,
        #[serde(with = "crate::rational::wire_vec")]
        density: Vec<Q>,
    },
    Ulam(UlamDensity),
}

/// Histogram estimate of an invariant density on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "UlamRaw", into = "UlamRaw")]
pub struct UlamDensity {
    masses: Vec<f64>,
    cumulative: Vec<f64>,
    iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct UlamRaw {
    masses: Vec<f64>,
    iterations: usize,
}

impl From<UlamRaw> for UlamDensity {
    fn from(raw: UlamRaw) -> Self {
        UlamDensity::from_masses(raw.masses, raw.iterations)
    }
}

impl From<UlamDensity> for UlamRaw {
    fn from(u: UlamDensity) -> Self {
        UlamRaw {
            masses: u.masses,
            iterations: u.iterations,
        }
    }
}

impl UlamDensity {
    fn from_masses(masses: Vec<f64>, iterations: usize) -> Self {
        let mut cumulative = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        UlamDensity {
            masses,
            cumulative,
            iterations,
        }
    }

    pub fn grid(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn cdf(&self, x: f64) -> f64 {
        let m = self.grid();
        let pos = (x.clamp(0.0, 1.0) * m as f64).min(m as f64);
        let i = (pos.floor() as usize).min(m - 1);
        self.cumulative[i] + self.masses[i] * (pos - i as f64)
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let m = self.grid();
        let i = self.cumulative.partition_point(|c| *c <= u).clamp(1, m) - 1;
        let within = if self.masses[i] > 0.0 {
            ((u - self.cumulative[i]) / self.masses[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        ((i as f64 + within) / m as f64).min(1.0)
    }

    /// Ulam approximation of the invariant density: each cell is split into four
    /// sub-cells whose images are treated as uniformly covered; the stationary
    /// vector is found by power iteration from the uniform distribution.
    pub fn estimate(map: &MapSpec, grid: usize, max_iter: usize, tol: f64) -> Result<Self> {
        if grid < 2 {
            return Err(Error::invalid("Ulam grid must have at least two cells"));
        }
        const SUB: usize = 4;
        let m = grid as f64;
        let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(grid);
        for i in 0..grid {
            let mut row: Vec<(u32, f64)> = Vec::new();
            for s in 0..SUB {
                let a = (i as f64 + s as f64 / SUB as f64) / m;
                let b = (i as f64 + (s + 1) as f64 / SUB as f64) / m;
                let fa = map.eval_f64(a)?;
                let fb = map.eval_f64(b.next_down().max(a))?;
                let (lo, hi) = if fa <= fb { (fa, fb) } else { (fb, fa) };
                let w = 1.0 / SUB as f64;
                spread(&mut row, lo, hi, w, grid);
            }
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for (j, p) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += p,
                    _ => merged.push((j, p)),
                }
            }
            rows.push(merged);
        }
        let mut v = vec![1.0 / m; grid];
        let mut next = vec![0.0; grid];
        let mut iterations = 0;
        for it in 1..=max_iter {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (i, row) in rows.iter().enumerate() {
                let vi = v[i];
                if vi == 0.0 {
                    continue;
                }
                for &(j, p) in row {
                    next[j as usize] += vi * p;
                }
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            let diff: f64 = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut v, &mut next);
            iterations = it;
            if diff < tol {
                break;
            }
        }
        Ok(UlamDensity::from_masses(v, iterations))
    }
}

fn spread(row: &mut Vec<(u32, f64)>, lo: f64, hi: f64, weight: f64, grid: usize) {
    let m = grid as f64;
    let first = ((lo * m).floor() as usize).min(grid - 1);
    if hi - lo <= 0.0 {
        row.push((first as u32, weight));
        return;
    }
    let last = (((hi * m).ceil() as usize).max(first + 1)).min(grid);
    for j in first..last {
        let c0 = (j as f64 / m).max(lo);
        let c1 = ((j + 1) as f64 / m).min(hi);
        if c1 > c0 {
            row.push((j as u32, weight * (c1 - c0) / (hi - lo)));
        }
    }
}

/// Measure choice as written in manifests; Ulam data is recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Lebesgue,
    Gauss,
    PiecewiseConstant {
        #[serde(with = "crate::rational::wire_vec")]
        breaks: Vec<Q>,
        #[serde(with = "crate::rational::wire_vec")]
        density: Vec<Q>,
    },
    Ulam { grid: usize, max_iter: usize },
}

impl MeasureSpec {
    pub fn resolve(&self, map: &MapSpec) -> Result<MeasureModel> {
        let model = match self {
            MeasureSpec::Lebesgue => MeasureModel::Lebesgue,
            MeasureSpec::Gauss => MeasureModel::Gauss,
            MeasureSpec::PiecewiseConstant { breaks, density } => MeasureModel::PiecewiseConstant {
                breaks: breaks.clone(),
                density: density.clone(),
            },
            MeasureSpec::Ulam { grid, max_iter } => {
                MeasureModel::Ulam(UlamDensity::estimate(map, *grid, *max_iter, 1e-13)?)
            }
        };
        model.validate()?;
        Ok(model)
    }

    /// The natural invariant measure for a map where one is known in closed form.
    pub fn natural_for(map: &MapSpec) -> MeasureSpec {
        use super::MapKind;
        match map.kind {
            MapKind::Gauss => MeasureSpec::Gauss,
            MapKind::Lsv { .. } | MapKind::Logistic { .. } => MeasureSpec::Ulam {
                grid: 1 << 16,
                max_iter: 5000,
            },
            _ => MeasureSpec::Lebesgue,
        }
    }
}

impl MeasureModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureModel::PiecewiseConstant { breaks, density } => {
                if breaks.len() != density.len() + 1 || density.is_empty() {
                    return Err(Error::invalid("piecewise-constant density shape mismatch"));
                }
                if breaks[0] != Q::zero() || breaks[breaks.len() - 1] != Q::one() {
                    return Err(Error::invalid("density breaks must run from 0 to 1"));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("density breaks must increase"));
                }
                if density.iter().any(|d| d < &Q::zero()) {
                    return Err(Error::invalid("negative density"));
                }
                let total: Q = breaks
                    .windows(2)
                    .zip(density)
                    .map(|(w, d)| (&w[1] - &w[0]) * d)
                    .sum();
                if total != Q::one() {
                    return Err(Error::invalid(format!(
                        "density integrates to {}, not 1",
                        rational::fmt_q(&total)
                    )));
                }
                Ok(())
            }
            MeasureModel::Ulam(u) => {
                let total: f64 = u.masses.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("Ulam masses sum to {total}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            MeasureModel::Lebesgue => x,
            MeasureModel::Gauss => (1.0 + x).log2(),
            MeasureModel::PiecewiseConstant { breaks, density } => {
                let mut acc = 0.0;
                for (w, d) in breaks.windows(2).zip(density) {
                    let a = rational::to_f64(&w[0]);
                    let b = rational::to_f64(&w[1]);
                    let d = rational::to_f64(d);
                    if x >= b {
                        acc += (b - a) * d;
                    } else {
                        acc += (x - a).max(0.0) * d;
                        break;
                    }
                }
                acc
            }
            MeasureModel::Ulam(u) => u.cdf(x),
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            MeasureModel::Lebesgue => u,
            MeasureModel::Gauss => u.exp2() - 1.0,
            MeasureModel::PiecewiseConstant { breaks, density } => {
                let mut acc = 0.0;
                for (w, d) in breaks.windows(2).zip(density) {
                    let a = rational::to_f64(&w[0]);
                    let b = rational::to_f64(&w[1]);
                    let d = rational::to_f64(d);
                    let mass = (b - a) * d;
                    if acc + mass >= u && mass > 0.0 {
                        return (a + (u - acc) / d).min(b);
                    }
                    acc += mass;
                }
                1.0
            }
            MeasureModel::Ulam(d) => d.inverse_cdf(u),
        }
    }

    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            0.0
        } else {
            self.cdf(b) - self.cdf(a)
        }
    }

    pub fn set_mass(&self, set: &IntervalSet) -> f64 {
        set.to_f64_pairs()
            .iter()
            .map(|(a, b)| self.interval_mass(*a, *b))
            .sum()
    }

    pub fn is_exact(&self) -> bool {
        matches!(
            self,
            MeasureModel::Lebesgue | MeasureModel::PiecewiseConstant { .. }
        )
    }

    /// Density as exact steps `(lo, hi, value)` covering `[0, 1)`.
    pub fn density_steps(&self) -> Result<Vec<(Q, Q, Q)>> {
        match self {
            MeasureModel::Lebesgue => Ok(vec![(Q::zero(), Q::one(), Q::one())]),
            MeasureModel::PiecewiseConstant { breaks, density } => Ok(breaks
                .windows(2)
                .zip(density)
                .map(|(w, d)| (w[0].clone(), w[1].clone(), d.clone()))
                .collect()),
            _ => Err(Error::Unsupported(
                "exact arithmetic needs a Lebesgue or piecewise-constant measure".into(),
            )),
        }
    }

    pub fn interval_mass_exact(&self, a: &Q, b: &Q) -> Result<Q> {
        if b <= a {
            return Ok(Q::zero());
        }
        let mut total = Q::zero();
        for (lo, hi, d) in self.density_steps()? {
            let l = a.max(&lo);
            let h = b.min(&hi);
            if l < h {
                total += (h - l) * d;
            }
        }
        Ok(total)
    }

    pub fn set_mass_exact(&self, set: &IntervalSet) -> Result<Q> {
        if let MeasureModel::Lebesgue = self {
            return Ok(set.lebesgue());
        }
        let mut total = Q::zero();
        for (a, b) in set.intervals() {
            total += self.interval_mass_exact(a, b)?;
        }
        Ok(total)
    }

    pub fn ball_mass(&self, obs: &Observable, r: f64) -> f64 {
        let (lo, hi) = obs.ball_f64(r);
        self.interval_mass(lo, hi)
    }
}

fn check_target(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("mu target {t} must lie in (0,1)")))
    }
}

/// Largest radius keeping the ball inside `[0, 1]` on its relevant side(s).
fn max_radius(obs: &Observable) -> f64 {
    let c = obs.center.to_f64();
    match obs.side {
        BallSide::TwoSided => c.min(1.0 - c),
        BallSide::RightOnly => 1.0 - c,
        BallSide::LeftOnly => c,
    }
}

/// Radius `r` with `μ(ball(x̃, r)) = t`.
pub fn radius_from_mu_target(measure: &MeasureModel, obs: &Observable, t: f64) -> Result<f64> {
    check_target(t)?;
    let c = obs.center.to_f64();
    let r = match measure {
        MeasureModel::Lebesgue => match obs.side {
            BallSide::TwoSided => t / 2.0,
            _ => t,
        },
        MeasureModel::Gauss => {
            let k = t.exp2();
            match obs.side {
                BallSide::RightOnly => (1.0 + c) * t.exp_m1_base2(),
                BallSide::LeftOnly => (1.0 + c) * (1.0 - 1.0 / k),
                BallSide::TwoSided => (1.0 + c) * (k - 1.0) / (k + 1.0),
            }
        }
        _ => {
            let rmax = max_radius(obs);
            if measure.ball_mass(obs, rmax) < t {
                return Err(Error::Unattainable(format!("{t}")));
            }
            let (mut lo, mut hi) = (0.0f64, rmax);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if measure.ball_mass(obs, mid) < t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    };
    // the last ulp of slack absorbs rounding in c ± r
    if r > max_radius(obs) * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::Unattainable(format!(
            "mass {t} needs radius {r}, beyond the edge of [0,1]"
        )));
    }
    Ok(r)
}

/// Exact inversion for Lebesgue measure and a rational center.
pub fn radius_from_mu_target_exact(measure: &MeasureModel, obs: &Observable, t: &Q) -> Result<Q> {
    if !(t > &Q::zero() && t < &Q::one()) {
        return Err(Error::invalid("mu target must lie in (0,1)"));
    }
    if !matches!(measure, MeasureModel::Lebesgue) {
        return Err(Error::Unsupported(
            "exact radius inversion is implemented for Lebesgue measure".into(),
        ));
    }
    let c = obs
        .center
        .as_rational()
        .ok_or_else(|| Error::Unsupported("exact radius needs a rational center".into()))?;
    let (r, fits) = match obs.side {
        BallSide::TwoSided => {
            let r = t / rational::qi(2);
            let fits = c - &r >= Q::zero() && c + &r <= Q::one();
            (r, fits)
        }
        BallSide::RightOnly => (t.clone(), c + t <= Q::one()),
        BallSide::LeftOnly => (t.clone(), c - t >= Q::zero()),
    };
    if !fits {
        return Err(Error::Unattainable(rational::fmt_q(t)));
    }
    Ok(r)
}

trait ExpM1Base2 {
    fn exp_m1_base2(self) -> f64;
}

impl ExpM1Base2 for f64 {
    /// `2^t - 1` without cancellation for small `t`.
    fn exp_m1_base2(self) -> f64 {
        (self * std::f64::consts::LN_2).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::real::Real;

    fn obs(c: Q, side: BallSide) -> Observable {
        Observable::new(Real::rational(c), super::super::Psi::NegLog, side).unwrap()
    }

    #[test]
    fn lebesgue_radii() {
        let o = obs(q(1, 2), BallSide::TwoSided);
        assert_eq!(radius_from_mu_target(&MeasureModel::Lebesgue, &o, 0.25).unwrap(), 0.125);
        assert_eq!(
            radius_from_mu_target_exact(&MeasureModel::Lebesgue, &o, &q(1, 4)).unwrap(),
            q(1, 8)
        );
        let z = obs(q(0, 1), BallSide::TwoSided);
        assert_eq!(radius_from_mu_target(&MeasureModel::Lebesgue, &z, 0.3).unwrap(), 0.3);
        let edge = obs(q(9, 10), BallSide::TwoSided);
        assert!(matches!(
            radius_from_mu_target(&MeasureModel::Lebesgue, &edge, 0.3),
            Err(Error::Unattainable(_))
        ));
    }

    #[test]
    fn gauss_radii() {
        let z = obs(q(0, 1), BallSide::RightOnly);
        let r = radius_from_mu_target(&MeasureModel::Gauss, &z, 0.5).unwrap();
        assert!((r - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(radius_from_mu_target(&MeasureModel::Gauss, &z, 1.0).is_err());
        for side in [BallSide::TwoSided, BallSide::LeftOnly, BallSide::RightOnly] {
            let o = obs(q(1, 3), side);
            let t = 1e-3;
            let r = radius_from_mu_target(&MeasureModel::Gauss, &o, t).unwrap();
            let back = MeasureModel::Gauss.ball_mass(&o, r);
            assert!((back - t).abs() <= 1e-12 * t, "{side:?}: {back}");
        }
    }

    #[test]
    fn piecewise_constant_round_trip() {
        let m = MeasureModel::PiecewiseConstant {
            breaks: vec![q(0, 1), q(1, 2), q(1, 1)],
            density: vec![q(3, 2), q(1, 2)],
        };
        m.validate().unwrap();
        let o = obs(q(1, 2), BallSide::TwoSided);
        let r = radius_from_mu_target(&m, &o, 0.2).unwrap();
        assert!((m.ball_mass(&o, r) - 0.2).abs() < 1e-12 * 0.2);
        assert_eq!(
            m.set_mass_exact(&IntervalSet::parse("0:1/4,3/4:1").unwrap()).unwrap(),
            q(1, 2)
        );
        let bad = MeasureModel::PiecewiseConstant {
            breaks: vec![q(0, 1), q(1, 1)],
            density: vec![q(1, 2)],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn inverse_cdf_inverts() {
        for m in [MeasureModel::Lebesgue, MeasureModel::Gauss] {
            for u in [0.0, 0.1, 0.5, 0.9] {
                assert!((m.cdf(m.inverse_cdf(u)) - u).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ulam_recovers_lebesgue_for_doubling() {
        let u = UlamDensity::estimate(&MapSpec::doubling(), 64, 100, 1e-14).unwrap();
        for m in u.masses() {
            assert!((m - 1.0 / 64.0).abs() < 1e-12);
        }
        let model = MeasureModel::Ulam(u);
        model.validate().unwrap();
        assert!((model.cdf(0.3) - 0.3).abs() < 1e-12);
        assert!((model.inverse_cdf(0.3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ulam_approximates_logistic_density() {
        // invariant density of the full logistic map: 1/(π sqrt(x(1-x)))
        let map = MapSpec::logistic(4.0).unwrap();
        // the histogram error decays roughly like 1/grid near the singular edges
        let u = UlamDensity::estimate(&map, 4096, 3000, 1e-13).unwrap();
        let model = MeasureModel::Ulam(u);
        for x in [0.1f64, 0.25, 0.5, 0.8] {
            let exact = 2.0 / std::f64::consts::PI * x.sqrt().asin();
            assert!((model.cdf(x) - exact).abs() < 1e-2, "x={x}: {}", model.cdf(x));
        }
    }
}
