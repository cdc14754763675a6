//! Point estimates with normal-approximation standard errors.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    /// Set when the normal approximation is not trustworthy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl EstimateWithCI {
    pub fn binomial(successes: u64, samples: u64) -> Self {
        if samples == 0 {
            return EstimateWithCI {
                estimate: f64::NAN,
                stderr: f64::NAN,
                samples,
                flag: Some("no samples".into()),
            };
        }
        let p = successes as f64 / samples as f64;
        let failures = samples - successes;
        let flag = if successes < 5 || failures < 5 {
            Some(format!("small count: {successes} of {samples}"))
        } else {
            None
        };
        EstimateWithCI {
            estimate: p,
            stderr: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            flag,
        }
    }

    /// Mean of i.i.d. samples with the standard error of the mean.
    pub fn mean(values: &[f64]) -> Self {
        let n = values.len() as u64;
        if n == 0 {
            return EstimateWithCI::binomial(0, 0);
        }
        let m = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let nonzero = values.iter().filter(|v| **v != 0.0).count();
        let flag = if nonzero == 0 {
            Some("no hits: zero-width interval".into())
        } else if nonzero < 5 {
            Some(format!("small count: {nonzero} nonzero samples"))
        } else {
            None
        };
        EstimateWithCI {
            estimate: m,
            stderr: (var / n as f64).sqrt(),
            samples: n,
            flag,
        }
    }

    /// Ratio `Σ a_i / Σ b_i` over independent groups, with the delta-method error.
    pub fn ratio(groups: &[(f64, f64)]) -> Self {
        let k = groups.len() as u64;
        let (sa, sb) = groups.iter().fold((0.0, 0.0), |s, g| (s.0 + g.0, s.1 + g.1));
        if sb == 0.0 {
            return EstimateWithCI {
                estimate: f64::NAN,
                stderr: f64::NAN,
                samples: k,
                flag: Some("empty denominator".into()),
            };
        }
        let r = sa / sb;
        let stderr = if k > 1 {
            let ss: f64 = groups.iter().map(|(a, b)| (a - r * b).powi(2)).sum();
            (ss * k as f64 / (k - 1) as f64).sqrt() / sb
        } else {
            f64::NAN
        };
        EstimateWithCI {
            estimate: r,
            stderr,
            samples: k,
            flag: None,
        }
    }

    /// `|estimate − target| ≤ z · stderr`
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.estimate - target).abs() <= z * self.stderr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_cases() {
        let all = EstimateWithCI::binomial(10, 10);
        assert_eq!((all.estimate, all.stderr), (1.0, 0.0));
        let m = EstimateWithCI::mean(&[0.0; 10]);
        assert_eq!(m.estimate, 0.0);
        assert!(m.flag.is_some());
        let r = EstimateWithCI::ratio(&[(1.0, 2.0), (2.0, 4.0)]);
        assert_eq!((r.estimate, r.stderr), (0.5, 0.0));
    }
}
