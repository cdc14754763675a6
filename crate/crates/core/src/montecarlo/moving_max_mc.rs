//! Moving-maximum law by simulation, one set of paths shared by every `(a, τ)` cell.
//!
//! `M_n = max(X_1, a·max(X_2..X_n), a·X_{n+1})` for `a ≥ 1`, so a path only needs `X_1`,
//! `X_{n+1}` and the largest raw draw among the middle `n − 1`. The draws are the same words
//! the generic process source consumes, so both routes see identical paths.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::driver::par_orbits;
use super::stats::EstimateWithCI;
use crate::error::{Error, Result};
use crate::processes::{moving_max_mn_law, moving_max_threshold, pareto_sample};
use crate::rng::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovingMaxCell {
    pub a: f64,
    pub tau: f64,
    pub n: u64,
    /// `u_n = (a+1) n / τ`
    pub u: f64,
    pub closed_form: f64,
    /// `e^{−τ a/(a+1)}`
    pub limit: f64,
    pub estimate: EstimateWithCI,
}

/// `(X_1, max(X_2..X_n), X_{n+1})` of one path.
fn path_summary(n: u64, seed: u64, stream: u64) -> (f64, f64, f64) {
    let mut rng = stream_rng(seed, stream);
    let x1 = pareto_sample(&mut rng);
    let mut w = 0u64;
    for _ in 1..n {
        w = w.max(rng.next_u64());
    }
    let mid = if n > 1 {
        1.0 / (1.0 - (w >> 11) as f64 * (-53f64).exp2())
    } else {
        f64::NEG_INFINITY
    };
    let last = pareto_sample(&mut rng);
    (x1, mid, last)
}

pub fn moving_max_mc(
    a_list: &[f64],
    tau_list: &[f64],
    n: u64,
    paths: u64,
    seed: u64,
) -> Result<Vec<MovingMaxCell>> {
    if n == 0 || paths == 0 {
        return Err(Error::invalid("n and paths must be positive"));
    }
    let summaries = par_orbits(paths, |i| path_summary(n, seed, i));
    let mut out = Vec::with_capacity(a_list.len() * tau_list.len());
    for &a in a_list {
        for &tau in tau_list {
            if !(tau > 0.0) {
                return Err(Error::invalid("tau must be positive"));
            }
            let u = moving_max_threshold(a, n, tau);
            let closed_form = moving_max_mn_law(a, n, u)?;
            let below = summaries
                .iter()
                .filter(|(x1, mid, last)| x1.max(a * mid).max(a * last) <= u)
                .count() as u64;
            out.push(MovingMaxCell {
                a,
                tau,
                n,
                u,
                closed_form,
                limit: (-tau * a / (a + 1.0)).exp(),
                estimate: EstimateWithCI::binomial(below, paths),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{SimConfig, System, Threshold};
    use crate::processes::{sample_path_stream, Process};

    #[test]
    fn shortcut_matches_full_paths() {
        for (n, stream) in [(1u64, 0u64), (2, 1), (7, 2), (300, 3)] {
            let (x1, mid, last) = path_summary(n, 5, stream);
            let mut rng = stream_rng(5, stream);
            let xs: Vec<f64> = (0..=n).map(|_| pareto_sample(&mut rng)).collect();
            for a in [1.0, 2.5] {
                let ys = crate::processes::moving_max_from(a, &xs);
                let m = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(m, x1.max(a * mid).max(a * last));
            }
            let ys = sample_path_stream(&Process::MovingMax { a: 2.0 }, n as usize, 5, stream).unwrap();
            assert_eq!(ys.len() as u64, n);
        }
    }

    #[test]
    fn agrees_with_generic_driver() {
        let cells = moving_max_mc(&[2.0], &[1.0], 50, 2000, 8).unwrap();
        let mut cfg = SimConfig::new(
            System::Process {
                process: Process::MovingMax { a: 2.0 },
            },
            None,
            Threshold::Level { u: cells[0].u },
        );
        cfg.orbits = 2000;
        cfg.seed = 8;
        cfg.n_max = 50;
        let e = crate::montecarlo::estimate_mn_law(&cfg, 50, cells[0].u).unwrap();
        assert_eq!(e.estimate, cells[0].estimate.estimate);
    }
}
