//! Running minimum of `L_n · ln ln n / n` along continued-fraction expansions, where
//! `L_n` is the largest of the first `n` partial quotients.

use serde::{Deserialize, Serialize};

use super::driver::par_orbits;
use crate::error::{Error, Result};
use crate::processes::{CfSource, CfStream};
use crate::real::Real;

/// Default first index of the running minimum; `ln ln n / n` is decreasing from here on.
pub const DEFAULT_N_START: u64 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhilippRow {
    /// `"orbit:<i>"` or the fixed input.
    pub label: String,
    /// `(n, min_{n_start ≤ m ≤ n} L_m ln ln m / m)` at each grid point reached.
    pub running_min: Vec<(u64, f64)>,
    /// Expansion length when it terminated before the last grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminated_at: Option<u64>,
    /// Set when a float input is read beyond its trusted depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_exhausted_at: Option<u64>,
}

impl PhilippRow {
    pub fn last(&self) -> Option<f64> {
        self.running_min.last().map(|p| p.1)
    }

    pub fn is_flagged(&self) -> bool {
        self.terminated_at.is_some() || self.precision_exhausted_at.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhilippSummary {
    pub n: u64,
    pub orbits: u64,
    pub median: f64,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
}

fn stat(l: u64, n: u64) -> f64 {
    let n = n as f64;
    l as f64 * n.ln().ln() / n
}

/// Running minima of one expansion at the grid points.
///
/// With `L` fixed the statistic decreases in `n`, so the minimum over a stretch without a new
/// record sits at its right end; only those ends and the grid points are evaluated.
pub fn philipp_row(stream: &mut CfStream, n_grid: &[u64], n_start: u64, label: String) -> PhilippRow {
    let n_max = *n_grid.last().unwrap_or(&0);
    let trusted = stream.trusted_depth();
    let mut row = PhilippRow {
        label,
        running_min: Vec::with_capacity(n_grid.len()),
        terminated_at: None,
        precision_exhausted_at: None,
    };
    let mut l = 0u64;
    let mut best = f64::INFINITY;
    let mut g = 0;
    for n in 1..=n_max {
        let Some(a) = stream.next_digit() else {
            row.terminated_at = Some(n - 1);
            break;
        };
        if let Some(t) = trusted {
            if n > t && row.precision_exhausted_at.is_none() {
                row.precision_exhausted_at = Some(n);
            }
        }
        if a > l {
            // the previous stretch ended at n − 1
            if n > n_start {
                best = best.min(stat(l, n - 1));
            }
            l = a;
        }
        if n_grid[g] == n {
            if n >= n_start {
                best = best.min(stat(l, n));
            }
            row.running_min.push((n, best));
            g += 1;
        }
    }
    row
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn validate(n_grid: &[u64], n_start: u64) -> Result<()> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return Err(Error::invalid("n grid must be strictly increasing and positive"));
    }
    if n_start < 3 {
        return Err(Error::invalid("n_start must be at least 3 so that ln ln n > 0"));
    }
    Ok(())
}

/// Gauss-distributed orbits, one stream per orbit.
pub fn philipp_statistic(
    orbits: u64,
    seed: u64,
    n_grid: &[u64],
    n_start: u64,
) -> Result<Vec<PhilippRow>> {
    validate(n_grid, n_start)?;
    Ok(par_orbits(orbits, |i| {
        let mut s = CfStream::random_gauss(seed, i);
        philipp_row(&mut s, n_grid, n_start, format!("orbit:{i}"))
    }))
}

/// The statistic for a fixed input `x`.
pub fn philipp_fixed(x: &Real, n_grid: &[u64], n_start: u64) -> Result<PhilippRow> {
    validate(n_grid, n_start)?;
    let mut s = CfStream::new(CfSource::FixedPoint { x: x.clone() })?;
    Ok(philipp_row(&mut s, n_grid, n_start, x.describe()))
}

/// Quantiles of the last running minimum over unflagged rows that reached the last grid point.
pub fn philipp_summary(rows: &[PhilippRow], n_grid: &[u64]) -> Option<PhilippSummary> {
    let n = *n_grid.last()?;
    let mut v: Vec<f64> = rows
        .iter()
        .filter(|r| !r.is_flagged() && r.running_min.last().map(|p| p.0) == Some(n))
        .filter_map(|r| r.last())
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    Some(PhilippSummary {
        n,
        orbits: v.len() as u64,
        median: quantile(&v, 0.5),
        q05: quantile(&v, 0.05),
        q25: quantile(&v, 0.25),
        q75: quantile(&v, 0.75),
        q95: quantile(&v, 0.95),
        min: v[0],
        max: v[v.len() - 1],
    })
}
