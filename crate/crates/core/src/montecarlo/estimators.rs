//! Short-return sums, recurrence and correlation estimates from independent stationary samples.

use serde::{Deserialize, Serialize};

use super::driver::par_orbits;
use super::source::{FloatKnobs, KeySource, Setup, SourceFn, System};
use super::stats::EstimateWithCI;
use crate::error::{Error, Result};
use crate::intervals::IntervalSet;
use crate::maps::{MapSpec, Observable};
use crate::precision::PrecisionMode;
use crate::rational::q;
use crate::real::Real;

/// Sample count, seed and numerics shared by the sampling estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<PrecisionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
}

impl Sampling {
    pub fn new(samples: u64, seed: u64) -> Self {
        Sampling {
            samples,
            seed,
            precision: None,
            burn_in: None,
        }
    }

    fn setup(&self, map: &MapSpec, obs: &Observable) -> Result<Setup> {
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        let knobs = FloatKnobs {
            burn_in: self.burn_in.unwrap_or(FloatKnobs::default().burn_in),
        };
        Setup::new(&System::map(map.clone()), Some(obs), self.precision, knobs)
    }
}

fn exact_zero(samples: u64) -> EstimateWithCI {
    EstimateWithCI {
        estimate: 0.0,
        stderr: 0.0,
        samples,
        flag: None,
    }
}

struct XiJob {
    bound: u64,
    p: u64,
}

impl SourceFn<f64> for XiJob {
    fn call<S: KeySource>(self, mut s: S) -> f64 {
        if s.key() >= self.bound {
            return 0.0;
        }
        let mut hits = 0u64;
        for _ in 0..self.p {
            s.step();
            if s.key() < self.bound {
                hits += 1;
            }
        }
        hits as f64
    }
}

/// `Σ_{j=1}^p μ(B ∩ f^{-j}B)` for the ball `B` of radius `r` about `center`.
pub fn estimate_xi(
    map: &MapSpec,
    center: &Real,
    r: f64,
    p: u64,
    sampling: &Sampling,
) -> Result<EstimateWithCI> {
    if p == 0 {
        return Err(Error::invalid("p must be at least 1"));
    }
    let obs = Observable::neglog(center.clone())?;
    let setup = sampling.setup(map, &obs)?;
    if !(r > 0.0) {
        return Ok(exact_zero(sampling.samples));
    }
    let bound = setup.radius_key(r);
    let values = par_orbits(sampling.samples, |i| {
        setup.with_source(sampling.seed, i, p + 1, XiJob { bound, p })
    });
    Ok(EstimateWithCI::mean(&values))
}

struct PairJob {
    n: u64,
}

impl SourceFn<(f64, f64)> for PairJob {
    fn call<S: KeySource>(self, mut s: S) -> (f64, f64) {
        let x = s.point();
        for _ in 0..self.n {
            s.step();
        }
        (x, s.point())
    }
}

fn sample_pairs(setup: &Setup, sampling: &Sampling, n: u64) -> Vec<(f64, f64)> {
    par_orbits(sampling.samples, |i| {
        setup.with_source(sampling.seed, i, n + 1, PairJob { n })
    })
}

fn any_observable() -> Observable {
    Observable::neglog(Real::rational(q(1, 2))).expect("1/2 is a valid center")
}

/// `μ{x : |f^n(x) − x| < r}`
pub fn estimate_recurrence(map: &MapSpec, r: f64, n: u64, sampling: &Sampling) -> Result<EstimateWithCI> {
    let setup = sampling.setup(map, &any_observable())?;
    if r >= 1.0 {
        return Ok(EstimateWithCI::binomial(sampling.samples, sampling.samples));
    }
    let pairs = sample_pairs(&setup, sampling, n);
    let hits = pairs.iter().filter(|(x, y)| (y - x).abs() < r).count() as u64;
    Ok(EstimateWithCI::binomial(hits, sampling.samples))
}

/// `|∫ 1_{S1} · 1_{S2}∘f^j dμ − μ(S1) μ(S2)|` with means taken from the same samples.
///
/// The standard error comes from the influence function of `E[XY] − E[X]E[Y]`.
pub fn estimate_correlation(
    map: &MapSpec,
    set1: &IntervalSet,
    set2: &IntervalSet,
    j: u64,
    sampling: &Sampling,
) -> Result<EstimateWithCI> {
    let setup = sampling.setup(map, &any_observable())?;
    let pairs = sample_pairs(&setup, sampling, j);
    let ind: Vec<(f64, f64)> = pairs
        .iter()
        .map(|(x, y)| {
            (
                set1.contains_f64(*x) as u8 as f64,
                set2.contains_f64(*y) as u8 as f64,
            )
        })
        .collect();
    let n = ind.len() as f64;
    let mx = ind.iter().map(|p| p.0).sum::<f64>() / n;
    let my = ind.iter().map(|p| p.1).sum::<f64>() / n;
    let mxy = ind.iter().map(|p| p.0 * p.1).sum::<f64>() / n;
    let g = mxy - mx * my;
    let infl: Vec<f64> = ind
        .iter()
        .map(|(x, y)| (x * y - mxy) - my * (x - mx) - mx * (y - my))
        .collect();
    let var = if ind.len() > 1 {
        infl.iter().map(|v| v * v).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(EstimateWithCI {
        estimate: g.abs(),
        stderr: (var / n).sqrt(),
        samples: sampling.samples,
        flag: None,
    })
}
