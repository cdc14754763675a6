//! I.i.d. Pareto variables and the moving maximum `Y_n = max(X_n, a X_{n+1})`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{open_unit, stream_rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Process {
    /// `P(X ≥ x) = 1/x` on `[1, ∞)`.
    ParetoIid,
    MovingMax { a: f64 },
}

/// Inverse CDF of the Pareto law.
pub fn pareto_from_uniform(u: f64) -> f64 {
    1.0 / (1.0 - u)
}

pub fn pareto_sample(rng: &mut impl Rng) -> f64 {
    1.0 / open_unit(rng)
}

fn check_a(a: f64) -> Result<()> {
    if a >= 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("moving-max weight must be finite and ≥ 1, got {a}")))
    }
}

/// `P(Y > y) = 1 − (1 − 1/y)(1 − a/y)`.
pub fn moving_max_tail(a: f64, y: f64) -> Result<f64> {
    check_a(a)?;
    if !(y > a) {
        return Err(Error::OutOfDomain(format!("tail needs y > a, got y = {y}, a = {a}")));
    }
    let (p, q) = (1.0 / y, a / y);
    Ok(p + q - p * q)
}

/// `P(M^Y_n < u) = (1 − 1/u)(1 − a/u)^n`.
pub fn moving_max_mn_law(a: f64, n: u64, u: f64) -> Result<f64> {
    check_a(a)?;
    if !(u > a) {
        return Err(Error::OutOfDomain(format!("law needs u > a, got u = {u}, a = {a}")));
    }
    Ok((1.0 - 1.0 / u) * (n as f64 * (-a / u).ln_1p()).exp())
}

pub fn moving_max_theta(a: f64) -> Result<f64> {
    check_a(a)?;
    Ok(a / (a + 1.0))
}

/// `u_n = (a+1) n / τ`, so that `n P(Y > u_n) → τ`.
pub fn moving_max_threshold(a: f64, n: u64, tau: f64) -> f64 {
    (a + 1.0) * n as f64 / tau
}

/// `Y_k = max(X_k, a X_{k+1})` for `k < xs.len()`.
pub fn moving_max_from(a: f64, xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| w[0].max(a * w[1])).collect()
}

/// `n` values of the process from stream `stream` of `seed`.
pub fn sample_path_stream(process: &Process, n: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, stream);
    match *process {
        Process::ParetoIid => Ok((0..n).map(|_| pareto_sample(&mut rng)).collect()),
        Process::MovingMax { a } => {
            check_a(a)?;
            let xs: Vec<f64> = (0..=n).map(|_| pareto_sample(&mut rng)).collect();
            Ok(moving_max_from(a, &xs))
        }
    }
}

pub fn sample_path(process: &Process, n: usize, seed: u64) -> Result<Vec<f64>> {
    sample_path_stream(process, n, seed, 0)
}

pub fn write_series_csv<W: std::io::Write>(w: W, series: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "value"])?;
    for (i, v) in series.iter().enumerate() {
        out.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(moving_max_tail(1.0, 4.0).unwrap(), 7.0 / 16.0);
        assert_eq!(moving_max_tail(2.0, 4.0).unwrap(), 5.0 / 8.0);
        assert!(moving_max_tail(2.0, 2.0).is_err());
        assert_eq!(moving_max_mn_law(1.0, 0, 4.0).unwrap(), 0.75);
        assert_eq!(moving_max_theta(1.0).unwrap(), 0.5);
        assert!((moving_max_theta(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((moving_max_theta(1e6).unwrap() - 0.999999).abs() < 1e-9);
        assert!(moving_max_theta(0.5).is_err());
    }

    #[test]
    fn limits() {
        let n = 100_000;
        let v = moving_max_mn_law(1.0, n, 2.0 * n as f64).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-4);
        let n = 1_000_000;
        let v = moving_max_mn_law(3.0, n, moving_max_threshold(3.0, n, 2.0)).unwrap();
        assert!((v - (-1.5f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn paths() {
        assert_eq!(pareto_from_uniform(0.5), 2.0);
        assert_eq!(moving_max_from(1.0, &[2.0, 5.0, 3.0]), vec![5.0, 5.0]);
        let p = Process::MovingMax { a: 2.0 };
        let s1 = sample_path(&p, 50, 9).unwrap();
        assert_eq!(s1, sample_path(&p, 50, 9).unwrap());
        assert_ne!(s1, sample_path(&p, 50, 10).unwrap());
        assert!(s1.iter().all(|y| *y >= 2.0));
    }
}
