//! Growth check on `r_{k^t} / r_{(k+1)^t}`.

use serde::{Deserialize, Serialize};

use super::family::ThresholdFamily;
use crate::error::Result;
use crate::maps::{MeasureModel, Observable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityRow {
    pub t: f64,
    pub k_max: u64,
    /// Largest `log(r_{k^t}/r_{(k+1)^t})` seen for `k ≤ k_max`.
    pub max_log_ratio: f64,
    pub early_max: f64,
    pub late_max: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub rows: Vec<RegularityRow>,
}

/// `ln_r(n)` is `log r_n`, `None` where undefined. A row is flagged when the log ratio
/// over `(k_max/2, k_max]` exceeds the one over `(k_max/4, k_max/2]` by more than `log 2`.
pub fn rn_regularity_check(
    ln_r: impl Fn(u64) -> Option<f64>,
    t_list: &[f64],
    k_max: u64,
    k_min: u64,
) -> RegularityReport {
    let rows = t_list
        .iter()
        .map(|&t| {
            let idx = |k: u64| (k as f64).powf(t).floor() as u64;
            let (mut all, mut early, mut late) =
                (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            let mut last_k = 0;
            for k in k_min.max(1)..=k_max {
                let (Some(a), Some(b)) = (ln_r(idx(k)), ln_r(idx(k + 1))) else {
                    continue;
                };
                let v = a - b;
                all = all.max(v);
                if 4 * k > k_max && 2 * k <= k_max {
                    early = early.max(v);
                } else if 2 * k > k_max {
                    late = late.max(v);
                }
                last_k = k;
            }
            let flagged = !all.is_finite() || late - early > std::f64::consts::LN_2;
            RegularityRow {
                t,
                k_max: last_k,
                max_log_ratio: all,
                early_max: early,
                late_max: late,
                flagged,
            }
        })
        .collect();
    RegularityReport { rows }
}

/// Regularity of the radii attached to a family under a measure and observable.
pub fn family_regularity(
    family: &ThresholdFamily,
    measure: &MeasureModel,
    obs: &Observable,
    t_list: &[f64],
    k_max: u64,
) -> Result<RegularityReport> {
    let k_min = (family.n0 as f64).sqrt().ceil() as u64 + 1;
    Ok(rn_regularity_check(
        |n| {
            if n < family.n0 {
                return None;
            }
            family.radius(n, measure, obs).ok().filter(|r| *r > 0.0).map(f64::ln)
        },
        t_list,
        k_max,
        k_min,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Real;

    #[test]
    fn power_and_exponential_radii() {
        let rep = rn_regularity_check(|n| Some(-(n as f64).ln()), &[1.0, 2.0, 3.0], 1000, 1);
        assert!(rep.rows.iter().all(|r| !r.flagged));
        assert!(rep.rows[0].max_log_ratio <= 2f64.ln() + 1e-12);
        let rep = rn_regularity_check(|n| Some(-(n as f64)), &[1.0, 2.0], 1000, 1);
        assert!(!rep.rows[0].flagged);
        assert!(rep.rows[1].flagged);
    }

    #[test]
    fn cloglog_under_lebesgue_is_regular() {
        let fam = ThresholdFamily::cloglog(1.0).unwrap();
        let obs = Observable::neglog(Real::silver()).unwrap();
        let rep =
            family_regularity(&fam, &MeasureModel::Lebesgue, &obs, &[1.0, 2.0], 1000).unwrap();
        for r in &rep.rows {
            assert!(!r.flagged, "{r:?}");
            assert!(r.max_log_ratio < 3.0);
        }
    }
}
