//! Occupation and exit frequencies of shrinking balls at a neutral fixed point.

use serde::{Deserialize, Serialize};

use super::driver::par_orbits;
use super::source::{FloatKnobs, KeySource, Setup, SourceFn, System};
use super::stats::EstimateWithCI;
use crate::error::{Error, Result};
use crate::maps::{MapKind, MapSpec, Observable};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    /// LSV parameter `a ∈ (0, 1)`.
    pub a: f64,
    pub radii: Vec<f64>,
    pub steps_per_orbit: u64,
    pub orbits: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub r: f64,
    /// `μ(U)`, `U = [0, r)`
    pub mu_u: EstimateWithCI,
    /// `μ(A^(1))`, points of `U` leaving it in one step
    pub mu_a: EstimateWithCI,
    pub visits: u64,
    pub exits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln μ(A^(1))` against `ln μ(U)`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// `1/(1−a)`
    pub predicted: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// Fewer exits than this at some radius flags the fit.
pub const MIN_EXITS: u64 = 100;

struct OccupationJob<'a> {
    radii: &'a [f64],
    steps: u64,
}

impl SourceFn<(Vec<u64>, Vec<u64>)> for OccupationJob<'_> {
    /// Per-radius visit and exit counts via difference arrays over the sorted radii.
    fn call<S: KeySource>(self, mut s: S) -> (Vec<u64>, Vec<u64>) {
        let k = self.radii.len();
        let r_max = self.radii[k - 1];
        let mut visit = vec![0i64; k + 1];
        let mut exit = vec![0i64; k + 1];
        let mut x = s.point();
        for _ in 0..self.steps {
            s.step();
            let y = s.point();
            if x < r_max {
                let lo = self.radii.partition_point(|r| *r <= x);
                visit[lo] += 1;
                let hi = self.radii.partition_point(|r| *r <= y);
                if hi > lo {
                    exit[lo] += 1;
                    exit[hi] -= 1;
                }
            }
            x = y;
        }
        let cum = |d: &[i64]| {
            let mut acc = 0i64;
            d[..k]
                .iter()
                .map(|v| {
                    acc += v;
                    acc as u64
                })
                .collect::<Vec<u64>>()
        };
        (cum(&visit), cum(&exit))
    }
}

fn slope_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let se = if xs.len() > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - b * (x - mx)).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (b, se)
}

/// `μ(A^(1)_r)` against `μ([0, r))` for the LSV map at its neutral fixed point.
pub fn estimate_theta_zero_scaling(cfg: &ScalingConfig) -> Result<ScalingFit> {
    let map = MapSpec::lsv(cfg.a)?;
    let mut radii = cfg.radii.clone();
    radii.sort_by(|a, b| a.total_cmp(b));
    radii.dedup();
    if radii.len() < 2 || !radii.iter().all(|r| *r > 0.0 && *r < 0.5) {
        return Err(Error::invalid("need at least two radii in (0, 1/2)"));
    }
    if cfg.orbits == 0 || cfg.steps_per_orbit == 0 {
        return Err(Error::invalid("orbits and steps must be positive"));
    }
    debug_assert!(matches!(map.kind, MapKind::Lsv { .. }));
    let obs = Observable::neglog(Real::rational(crate::rational::qi(0)))?;
    let knobs = FloatKnobs {
        burn_in: cfg.burn_in.unwrap_or(FloatKnobs::default().burn_in),
    };
    let setup = Setup::new(&System::map(map), Some(&obs), None, knobs)?;
    let counts = par_orbits(cfg.orbits, |i| {
        setup.with_source(
            cfg.seed,
            i,
            cfg.steps_per_orbit,
            OccupationJob {
                radii: &radii,
                steps: cfg.steps_per_orbit,
            },
        )
    });
    let steps = cfg.steps_per_orbit as f64;
    let rows: Vec<ScalingRow> = radii
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let per_orbit = |pick: fn(&(Vec<u64>, Vec<u64>)) -> &Vec<u64>| {
                counts.iter().map(|c| pick(c)[j] as f64 / steps).collect::<Vec<f64>>()
            };
            ScalingRow {
                r: *r,
                mu_u: EstimateWithCI::mean(&per_orbit(|c| &c.0)),
                mu_a: EstimateWithCI::mean(&per_orbit(|c| &c.1)),
                visits: counts.iter().map(|c| c.0[j]).sum(),
                exits: counts.iter().map(|c| c.1[j]).sum(),
            }
        })
        .collect();
    let thin = rows.iter().filter(|r| r.exits < MIN_EXITS).count();
    let flag = (thin > 0).then(|| {
        format!("insufficient small-radius resolution: {thin} radii with fewer than {MIN_EXITS} exits")
    });
    let usable: Vec<&ScalingRow> = rows.iter().filter(|r| r.exits > 0).collect();
    let (slope, slope_stderr) = if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|r| r.mu_u.estimate.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|r| r.mu_a.estimate.ln()).collect();
        slope_fit(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ScalingFit {
        rows,
        slope,
        slope_stderr,
        predicted: 1.0 / (1.0 - cfg.a),
        flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_fit() {
        let (b, se) = slope_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert_eq!(b, 2.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn counts_are_nested() {
        let cfg = ScalingConfig {
            a: 0.5,
            radii: vec![0.01, 0.05, 0.1],
            steps_per_orbit: 100_000,
            orbits: 2,
            seed: 4,
            burn_in: Some(1000),
        };
        let fit = estimate_theta_zero_scaling(&cfg).unwrap();
        for w in fit.rows.windows(2) {
            assert!(w[0].visits <= w[1].visits && w[0].exits <= w[1].exits);
        }
        assert!(fit.rows.iter().all(|r| r.exits <= r.visits));
    }
}
