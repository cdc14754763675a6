//! Extremal index: closed form at periodic centers, exact `A^(q)` ratios, and the runs and
//! blocks estimators on exceedance series.

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::driver::{par_orbits, KeySeq, SimConfig, Threshold};
use super::source::{KeySource, SourceFn};
use super::stats::EstimateWithCI;
use crate::error::{Error, Result};
use crate::maps::MapSpec;
use crate::rational::{fmt_q, Q};
use crate::real::Real;

/// Exceedance counts below this leave the normal approximation untrustworthy.
pub const MIN_EXCEEDANCES: u64 = 30;

/// Fewer orbits (or batches) than this make the group-variance error itself noisy.
pub const MIN_GROUPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ThetaMethod {
    /// `1 − 1/|(f^q)'(x̃)|` or `a/(a+1)`
    ClosedForm,
    /// `μ(A^(q))/μ(B)` from the exact engine
    ExactAq { q: u64 },
    /// Share of exceedances followed by `q` non-exceedances.
    Runs { q: u64 },
    /// Blocks with an exceedance per exceedance.
    Blocks { block_len: u64 },
}

impl ThetaMethod {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let arg = || -> Result<u64> {
            arg.parse::<u64>()
                .ok()
                .filter(|v| *v >= 1)
                .ok_or_else(|| Error::invalid(format!("method {s:?} needs a positive integer")))
        };
        match name {
            "runs" => Ok(ThetaMethod::Runs { q: arg()? }),
            "blocks" => Ok(ThetaMethod::Blocks { block_len: arg()? }),
            _ => Err(Error::invalid(format!("unknown theta method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: ThetaMethod,
    /// Exact rational value, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    /// Number of exceedances behind an estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceedances: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl ThetaEstimate {
    pub fn exact(value: &Q, method: ThetaMethod) -> Self {
        ThetaEstimate {
            value: crate::rational::to_f64(value),
            stderr: 0.0,
            method,
            exact: Some(fmt_q(value)),
            exceedances: None,
            flag: None,
        }
    }

    pub fn closed(value: f64) -> Self {
        ThetaEstimate {
            value,
            stderr: 0.0,
            method: ThetaMethod::ClosedForm,
            exact: None,
            exceedances: None,
            flag: None,
        }
    }

    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.stderr
    }
}

/// `θ = 1 − 1/|(f^q)'(x̃)|` at a center of period dividing `q`.
///
/// Rational centers go through exact arithmetic; others use floats and a `1e-9` return check.
pub fn closed_form_theta(map: &MapSpec, center: &Real, q: u64) -> Result<ThetaEstimate> {
    if q == 0 {
        return Err(Error::invalid("q must be at least 1"));
    }
    if let Some(c) = center.as_rational() {
        if map.eval_exact(c).is_ok() {
            let mut x = c.clone();
            let mut d = Q::one();
            for _ in 0..q {
                d *= map.derivative_exact(&x)?;
                x = map.eval_exact(&x)?;
            }
            if &x != c {
                return Err(Error::invalid(format!(
                    "{} is not periodic with period dividing {q}",
                    fmt_q(c)
                )));
            }
            let d = d.abs();
            if d <= Q::one() {
                return Err(Error::invalid("periodic orbit is not repelling"));
            }
            let theta = Q::one() - d.recip();
            return Ok(ThetaEstimate::exact(&theta, ThetaMethod::ClosedForm));
        }
    }
    let c = center.to_f64();
    let (mut x, mut d) = (c, 1.0);
    for _ in 0..q {
        d *= map.derivative(x)?.abs();
        x = map.eval_f64(x)?;
    }
    if (x - c).abs() > 1e-9 {
        return Err(Error::invalid(format!("{c} is not periodic with period dividing {q}")));
    }
    if !(d > 1.0) {
        return Err(Error::invalid("periodic orbit is not repelling"));
    }
    Ok(ThetaEstimate::closed(1.0 - 1.0 / d))
}

/// Streaming numerator/denominator of one exceedance series, censored at its end.
#[derive(Clone, Debug)]
struct Counter {
    method: ThetaMethod,
    t: u64,
    num: u64,
    den: u64,
    last_exc: Option<u64>,
    block_hit: bool,
    block_exc: u64,
}

impl Counter {
    fn new(method: ThetaMethod) -> Result<Self> {
        match method {
            ThetaMethod::Runs { q: 0 } | ThetaMethod::Blocks { block_len: 0 } => {
                return Err(Error::invalid("run length and block length must be positive"))
            }
            ThetaMethod::ClosedForm | ThetaMethod::ExactAq { .. } => {
                return Err(Error::invalid("not an estimator"))
            }
            _ => {}
        }
        Ok(Counter {
            method,
            t: 0,
            num: 0,
            den: 0,
            last_exc: None,
            block_hit: false,
            block_exc: 0,
        })
    }

    #[inline]
    fn push(&mut self, exc: bool) {
        match self.method {
            ThetaMethod::Runs { q } => {
                if exc {
                    if let Some(l) = self.last_exc {
                        if self.t - l > q {
                            self.num += 1;
                        }
                    }
                    self.last_exc = Some(self.t);
                    self.den += 1;
                }
            }
            ThetaMethod::Blocks { block_len } => {
                if exc {
                    self.block_hit = true;
                    self.block_exc += 1;
                }
                if (self.t + 1) % block_len == 0 {
                    self.num += self.block_hit as u64;
                    self.den += self.block_exc;
                    self.block_hit = false;
                    self.block_exc = 0;
                }
            }
            _ => unreachable!(),
        }
        self.t += 1;
    }

    /// `(numerator, denominator)` after censoring exceedances whose window is incomplete.
    fn finish(&self) -> (u64, u64) {
        match self.method {
            ThetaMethod::Runs { q } => match self.last_exc {
                Some(l) if self.t - 1 - l >= q => (self.num + 1, self.den),
                Some(_) => (self.num, self.den - 1),
                None => (0, 0),
            },
            _ => (self.num, self.den),
        }
    }
}

fn theta_from_groups(groups: &[(u64, u64)], method: ThetaMethod) -> Result<ThetaEstimate> {
    let total: u64 = groups.iter().map(|g| g.1).sum();
    if total == 0 {
        return Err(Error::NoExceedances);
    }
    let g: Vec<(f64, f64)> = groups.iter().map(|(a, b)| (*a as f64, *b as f64)).collect();
    let est = EstimateWithCI::ratio(&g);
    let flag = if total < MIN_EXCEEDANCES {
        Some(format!("only {total} exceedances; interval unreliable"))
    } else if groups.len() < MIN_GROUPS {
        Some(format!("standard error from only {} groups", groups.len()))
    } else {
        None
    };
    Ok(ThetaEstimate {
        value: est.estimate,
        stderr: est.stderr,
        method,
        exact: None,
        exceedances: Some(total),
        flag,
    })
}

/// Number of batches used for the standard error of a single series.
const SERIES_BATCHES: usize = 20;

/// Runs or blocks estimate from one exceedance series.
///
/// Exceedances are grouped into contiguous batches for the delta-method error; run windows
/// look across batch boundaries and are censored only at the end of the series.
pub fn theta_from_series(series: &[bool], method: ThetaMethod) -> Result<ThetaEstimate> {
    let len = series.len();
    let batches = SERIES_BATCHES.min(len.max(1));
    let mut groups = vec![(0u64, 0u64); batches];
    let batch_of = |i: usize| i * batches / len.max(1);
    match method {
        ThetaMethod::Runs { q } => {
            Counter::new(method)?;
            let q = q as usize;
            let mut next_exc = len;
            for i in (0..len).rev() {
                if series[i] {
                    // undecided only if the window runs past the end with no later exceedance
                    if i + q < len || next_exc < len {
                        let g = &mut groups[batch_of(i)];
                        g.1 += 1;
                        g.0 += (next_exc > i + q) as u64;
                    }
                    next_exc = i;
                }
            }
        }
        ThetaMethod::Blocks { block_len } => {
            Counter::new(method)?;
            let b = block_len as usize;
            for (k, block) in series.chunks_exact(b).enumerate() {
                let g = &mut groups[batch_of(k * b)];
                let c = block.iter().filter(|e| **e).count() as u64;
                g.0 += (c > 0) as u64;
                g.1 += c;
            }
        }
        _ => {
            Counter::new(method)?;
        }
    }
    theta_from_groups(&groups, method)
}

struct ThetaJob<'a> {
    bound: u64,
    steps: u64,
    counter: &'a Counter,
}

impl SourceFn<(u64, u64)> for ThetaJob<'_> {
    fn call<S: KeySource>(self, mut s: S) -> (u64, u64) {
        let mut c = self.counter.clone();
        for t in 0..self.steps {
            c.push(s.key() < self.bound);
            if t + 1 < self.steps {
                s.step();
            }
        }
        c.finish()
    }
}

/// Runs or blocks estimate along simulated orbits, one group per orbit.
///
/// The threshold must be fixed (`Level`, `Radius` or `Mass`); each orbit contributes
/// `cfg.n_max` observations.
pub fn estimate_theta(cfg: &SimConfig, method: ThetaMethod) -> Result<ThetaEstimate> {
    let setup = cfg.setup()?;
    if let Threshold::Family { .. } = cfg.threshold {
        return Err(Error::invalid("the extremal index needs a fixed threshold"));
    }
    let (seq, _) = KeySeq::build(&setup, &cfg.threshold, 1, cfg.n_max)?;
    let bound = seq.key(&setup, 1)?;
    let counter = Counter::new(method)?;
    let groups = par_orbits(cfg.orbits, |i| {
        setup.with_source(
            cfg.seed,
            i,
            cfg.n_max,
            ThetaJob {
                bound,
                steps: cfg.n_max,
                counter: &counter,
            },
        )
    });
    theta_from_groups(&groups, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Observable;
    use crate::montecarlo::System;
    use crate::processes::Process;
    use crate::rational::{q, qi};

    fn ser(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn runs_and_blocks_by_hand() {
        // exceedances at 1,2,6,7,8; runs(1) ends: 2 and 8 (8 is censored at q=2, 7 is not)
        let s = ser("0110001110");
        let r1 = theta_from_series(&s, ThetaMethod::Runs { q: 1 }).unwrap();
        assert_eq!(r1.value, 2.0 / 5.0);
        let r2 = theta_from_series(&s, ThetaMethod::Runs { q: 2 }).unwrap();
        assert_eq!((r2.value, r2.exceedances), (1.0 / 4.0, Some(4)));
        let r3 = theta_from_series(&ser("0110001101"), ThetaMethod::Runs { q: 3 }).unwrap();
        assert_eq!((r3.value, r3.exceedances), (1.0 / 4.0, Some(4)));
        let b = theta_from_series(&s, ThetaMethod::Blocks { block_len: 5 }).unwrap();
        assert_eq!(b.value, 2.0 / 5.0);
        assert!(r1.flag.is_some());
        assert!(matches!(
            theta_from_series(&ser("000"), ThetaMethod::Runs { q: 1 }),
            Err(Error::NoExceedances)
        ));
    }

    #[test]
    fn streaming_counter_matches_series() {
        let s = ser("1101000111010000011");
        for method in [
            ThetaMethod::Runs { q: 1 },
            ThetaMethod::Runs { q: 3 },
            ThetaMethod::Blocks { block_len: 4 },
        ] {
            let mut c = Counter::new(method).unwrap();
            s.iter().for_each(|e| c.push(*e));
            let (a, b) = c.finish();
            let t = theta_from_series(&s, method).unwrap();
            assert_eq!(a as f64 / b as f64, t.value, "{method:?}");
        }
    }

    #[test]
    fn closed_forms() {
        let d = MapSpec::doubling();
        let t = closed_form_theta(&d, &Real::rational(qi(0)), 1).unwrap();
        assert_eq!(t.exact.as_deref(), Some("1/2"));
        let t = closed_form_theta(&d, &Real::rational(q(1, 3)), 2).unwrap();
        assert_eq!(t.exact.as_deref(), Some("3/4"));
        assert!(closed_form_theta(&d, &Real::rational(q(1, 3)), 1).is_err());
        // golden-ratio conjugate is the Gauss fixed point, |G'| = 1/g²
        let g = Real::golden();
        let t = closed_form_theta(&MapSpec::gauss(), &g, 1).unwrap();
        let gf = g.to_f64();
        assert!((t.value - (1.0 - gf * gf)).abs() < 1e-12);
    }

    #[test]
    fn pareto_has_no_clusters() {
        let mut cfg = SimConfig::new(
            System::Process {
                process: Process::ParetoIid,
            },
            None,
            Threshold::Mass { mass: 0.01 },
        );
        cfg.n_max = 20_000;
        cfg.orbits = 20;
        let t = estimate_theta(&cfg, ThetaMethod::Runs { q: 1 }).unwrap();
        assert!(t.value > 0.97, "{t:?}");
        let d = SimConfig::new(
            System::map(MapSpec::doubling()),
            Some(Observable::neglog(Real::rational(qi(0))).unwrap()),
            Threshold::Mass { mass: 0.01 },
        );
        let t = estimate_theta(&SimConfig { n_max: 50_000, orbits: 20, ..d }, ThetaMethod::Runs { q: 1 })
            .unwrap();
        assert!(t.within(0.5, 4.0), "{t:?}");
    }
}
