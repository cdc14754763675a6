//! Maximum-process simulation: running maxima at checkpoints and eventually-always-hitting
//! violations, one independent stream per orbit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::source::{FloatKnobs, KeySource, Setup, SourceFn, System};
use super::stats::EstimateWithCI;
use crate::criteria::ThresholdFamily;
use crate::error::{Error, Result};
use crate::maps::Observable;
use crate::precision::PrecisionMode;

/// `f64` that serializes infinities as `"inf"` / `"-inf"`.
pub mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else if *x < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                _ => t.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Threshold {
    /// Fixed level `u` for every `n`.
    Level {
        #[serde(with = "ext_f64")]
        u: f64,
    },
    /// Fixed ball radius (maps only).
    Radius { r: f64 },
    /// Fixed tail mass `μ(X_1 > u)`.
    Mass { mass: f64 },
    /// `u_n` with `μ(X_1 > u_n) = μ_n`.
    Family { family: ThresholdFamily },
}

/// Which `n` are tested for `M_n < u_n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationScan {
    /// Every `n` in `[n_min, n_max]`.
    #[default]
    EveryStep,
    /// Checkpoints in `[n_min, n_max]` only.
    Checkpoints,
}

impl ViolationScan {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "checkpoints" => Ok(ViolationScan::Checkpoints),
            "every-step" | "every_step" => Ok(ViolationScan::EveryStep),
            _ => Err(Error::invalid(format!("unknown violation scan {s:?}"))),
        }
    }
}

fn default_ratio() -> f64 {
    2.0
}

fn default_one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub system: System,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Observable>,
    pub threshold: Threshold,
    pub n_max: u64,
    /// First `n` at which eventually-always-hitting is checked.
    #[serde(default = "default_one")]
    pub n_min: u64,
    /// Checkpoints are `⌊ratio^k⌋` plus `n_max`.
    #[serde(default = "default_ratio")]
    pub checkpoint_ratio: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_checkpoints: Vec<u64>,
    #[serde(default)]
    pub violation_scan: ViolationScan,
    pub orbits: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<PrecisionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
}

impl SimConfig {
    pub fn new(system: System, observable: Option<Observable>, threshold: Threshold) -> Self {
        SimConfig {
            system,
            observable,
            threshold,
            n_max: 1000,
            n_min: 1,
            checkpoint_ratio: 2.0,
            extra_checkpoints: Vec::new(),
            violation_scan: ViolationScan::EveryStep,
            orbits: 100,
            seed: 0,
            precision: None,
            burn_in: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.orbits == 0 {
            return Err(Error::invalid("orbits must be at least 1"));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::invalid("need 1 <= n_min <= n_max"));
        }
        if !(self.checkpoint_ratio > 1.0) {
            return Err(Error::invalid("checkpoint ratio must exceed 1"));
        }
        if let Some(n) = self.extra_checkpoints.iter().find(|n| **n == 0 || **n > self.n_max) {
            return Err(Error::invalid(format!("checkpoint {n} outside [1, n_max]")));
        }
        Ok(())
    }

    /// Strictly increasing checkpoints ending at `n_max`.
    pub fn checkpoints(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        let mut v = 1.0f64;
        loop {
            v *= self.checkpoint_ratio;
            let n = v.floor() as u64;
            if v >= self.n_max as f64 {
                break;
            }
            out.push(n);
        }
        out.push(self.n_max);
        out.extend(self.extra_checkpoints.iter().copied());
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(crate) fn setup(&self) -> Result<Setup> {
        self.validate()?;
        let knobs = FloatKnobs {
            burn_in: self.burn_in.unwrap_or(FloatKnobs::default().burn_in),
        };
        Setup::new(&self.system, self.observable.as_ref(), self.precision, knobs)
    }

    pub fn hash(&self) -> Result<String> {
        crate::hashing::config_hash(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub orbit_index: u64,
    /// `(n, M_n)` at each checkpoint.
    pub m_at_checkpoints: Vec<(u64, f64)>,
    /// Least scanned `n ≥ n_min` with `M_n < u_n`.
    pub first_violation_n: Option<u64>,
    /// Largest scanned `n ≤ n_max` with `M_n < u_n`.
    pub last_violation_n: Option<u64>,
    pub eah_up_to_horizon: bool,
}

/// `key(n)` non-increasing in `n`; a step is a hit for `u_n` iff its key is below `key(n)`.
pub(crate) enum KeySeq {
    Fixed(u64),
    Family { family: ThresholdFamily },
}

impl KeySeq {
    pub(crate) fn build(setup: &Setup, t: &Threshold, n_min: u64, n_max: u64) -> Result<(KeySeq, u64)> {
        match t {
            Threshold::Level { u } => Ok((KeySeq::Fixed(setup.level_key(*u)), n_min)),
            Threshold::Radius { r } => {
                if setup.observable().is_none() {
                    return Err(Error::invalid("radius thresholds need a map observable"));
                }
                Ok((KeySeq::Fixed(setup.radius_key(*r)), n_min))
            }
            Threshold::Mass { mass } => Ok((KeySeq::Fixed(setup.mass_key(*mass)?), n_min)),
            Threshold::Family { family } => {
                let n_min = n_min.max(family.n0);
                if n_min > n_max {
                    return Err(Error::invalid(format!(
                        "family starts at n0 = {} beyond n_max = {n_max}",
                        family.n0
                    )));
                }
                if let Some(len) = family.table_len() {
                    if len < n_max {
                        return Err(Error::invalid(format!(
                            "table of length {len} is shorter than n_max = {n_max}"
                        )));
                    }
                }
                let seq = KeySeq::Family {
                    family: family.clone(),
                };
                // the largest mass sits at n_min; fail early if it is unattainable
                let mut prev = seq.key(setup, n_min)?;
                let mut n = n_min;
                while n < n_max {
                    n = (n * 2).min(n_max);
                    let k = seq.key(setup, n)?;
                    if k > prev {
                        return Err(Error::invalid(format!(
                            "threshold radii must shrink with n; radius grows at n = {n}"
                        )));
                    }
                    prev = k;
                }
                Ok((seq, n_min))
            }
        }
    }

    pub(crate) fn key(&self, setup: &Setup, n: u64) -> Result<u64> {
        match self {
            KeySeq::Fixed(k) => Ok(*k),
            KeySeq::Family { family } => {
                let m = family
                    .mu(n)
                    .ok_or_else(|| Error::invalid(format!("family undefined at n = {n}")))?;
                setup.mass_key(m)
            }
        }
    }

    fn key_or_max(&self, setup: &Setup, n: u64) -> u64 {
        self.key(setup, n).unwrap_or(u64::MAX)
    }
}

pub(crate) struct Tracker<'a> {
    seq: &'a KeySeq,
    n_min: u64,
    first: Option<u64>,
    last: Option<u64>,
}

impl Tracker<'_> {
    /// Running minimum key `m` held on `[a, b]`; violations are `n` with `key(n) ≤ m`,
    /// a suffix of the segment because `key` is non-increasing.
    fn close(&mut self, setup: &Setup, a: u64, b: u64, m: u64) {
        let lo = a.max(self.n_min);
        if lo > b {
            return;
        }
        if self.seq.key_or_max(setup, b) > m {
            return;
        }
        let (mut l, mut h) = (lo, b);
        while l < h {
            let mid = l + (h - l) / 2;
            if self.seq.key_or_max(setup, mid) <= m {
                h = mid;
            } else {
                l = mid + 1;
            }
        }
        self.first.get_or_insert(l);
        self.last = Some(b);
    }
}

pub(crate) struct OrbitOutcome {
    pub min_keys: Vec<u64>,
    pub violations: Vec<(Option<u64>, Option<u64>)>,
}

struct OrbitJob<'a> {
    setup: &'a Setup,
    n_max: u64,
    checkpoints: &'a [u64],
    seqs: &'a [(KeySeq, u64)],
    scan: ViolationScan,
}

impl SourceFn<OrbitOutcome> for OrbitJob<'_> {
    fn call<S: KeySource>(self, mut s: S) -> OrbitOutcome {
        let mut trackers: Vec<Tracker> = self
            .seqs
            .iter()
            .map(|(seq, n_min)| Tracker {
                seq,
                n_min: *n_min,
                first: None,
                last: None,
            })
            .collect();
        let mut min_keys = Vec::with_capacity(self.checkpoints.len());
        let mut cur = u64::MAX;
        let mut seg_start = 1;
        let mut next_cp = 0;
        let every = self.scan == ViolationScan::EveryStep;
        for n in 1..=self.n_max {
            let k = s.key();
            if k < cur {
                if every {
                    for t in trackers.iter_mut() {
                        t.close(self.setup, seg_start, n - 1, cur);
                    }
                }
                cur = k;
                seg_start = n;
            }
            if self.checkpoints.get(next_cp) == Some(&n) {
                min_keys.push(cur);
                next_cp += 1;
                if !every {
                    for t in trackers.iter_mut() {
                        t.close(self.setup, n, n, cur);
                    }
                }
            }
            if n < self.n_max {
                s.step();
            }
        }
        if every {
            for t in trackers.iter_mut() {
                t.close(self.setup, seg_start, self.n_max, cur);
            }
        }
        OrbitOutcome {
            min_keys,
            violations: trackers.iter().map(|t| (t.first, t.last)).collect(),
        }
    }
}

/// Runs `f` on a pool of `workers` threads (0 = the global pool).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Per-orbit results in orbit order, whatever the worker count.
pub(crate) fn par_orbits<T: Send>(orbits: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..orbits).into_par_iter().map(f).collect()
}

/// One set of run records per threshold, all sharing the same orbits.
pub fn simulate_sweep(cfg: &SimConfig, thresholds: &[Threshold]) -> Result<Vec<Vec<RunRecord>>> {
    let setup = cfg.setup()?;
    let checkpoints = cfg.checkpoints();
    let seqs = thresholds
        .iter()
        .map(|t| KeySeq::build(&setup, t, cfg.n_min, cfg.n_max))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = par_orbits(cfg.orbits, |i| {
        setup.with_source(
            cfg.seed,
            i,
            cfg.n_max,
            OrbitJob {
                setup: &setup,
                n_max: cfg.n_max,
                checkpoints: &checkpoints,
                seqs: &seqs,
                scan: cfg.violation_scan,
            },
        )
    });
    Ok((0..thresholds.len())
        .map(|j| {
            outcomes
                .iter()
                .enumerate()
                .map(|(i, o)| RunRecord {
                    orbit_index: i as u64,
                    m_at_checkpoints: checkpoints
                        .iter()
                        .zip(&o.min_keys)
                        .map(|(n, k)| (*n, setup.key_value(*k)))
                        .collect(),
                    first_violation_n: o.violations[j].0,
                    last_violation_n: o.violations[j].1,
                    eah_up_to_horizon: o.violations[j].1.is_none(),
                })
                .collect()
        })
        .collect())
}

pub fn simulate_max_process(cfg: &SimConfig) -> Result<Vec<RunRecord>> {
    Ok(simulate_sweep(cfg, std::slice::from_ref(&cfg.threshold))?.remove(0))
}

struct MinJob {
    n: u64,
}

impl SourceFn<u64> for MinJob {
    fn call<S: KeySource>(self, mut s: S) -> u64 {
        let mut cur = u64::MAX;
        for i in 0..self.n {
            cur = cur.min(s.key());
            if i + 1 < self.n {
                s.step();
            }
        }
        cur
    }
}

/// Fraction of orbits with `M_n ≤ u`.
pub fn estimate_mn_law(cfg: &SimConfig, n: u64, u: f64) -> Result<EstimateWithCI> {
    if n == 0 {
        return Ok(EstimateWithCI::binomial(cfg.orbits, cfg.orbits));
    }
    let setup = cfg.setup()?;
    let key = setup.level_key(u);
    let keys = par_orbits(cfg.orbits, |i| setup.with_source(cfg.seed, i, n, MinJob { n }));
    Ok(EstimateWithCI::binomial(
        keys.iter().filter(|k| **k >= key).count() as u64,
        cfg.orbits,
    ))
}

/// Survivor fraction `M_n < u` for a fixed ball radius.
pub fn estimate_survivor(cfg: &SimConfig, n: u64, r: f64) -> Result<EstimateWithCI> {
    let setup = cfg.setup()?;
    let key = setup.radius_key(r);
    let keys = par_orbits(cfg.orbits, |i| setup.with_source(cfg.seed, i, n, MinJob { n }));
    Ok(EstimateWithCI::binomial(
        keys.iter().filter(|k| **k >= key).count() as u64,
        cfg.orbits,
    ))
}

/// Fraction of orbits with `M_n ≥ u_n` for every `n ∈ [n_min, n_max]`.
pub fn eah_fraction(cfg: &SimConfig, n_min: u64) -> Result<EstimateWithCI> {
    if n_min >= cfg.n_max {
        return Err(Error::invalid("need n_min < n_max"));
    }
    let mut c = cfg.clone();
    c.n_min = n_min;
    Ok(eah_from_records(&simulate_max_process(&c)?))
}

pub fn eah_from_records(records: &[RunRecord]) -> EstimateWithCI {
    EstimateWithCI::binomial(
        records.iter().filter(|r| r.eah_up_to_horizon).count() as u64,
        records.len() as u64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapSpec;
    use crate::real::Real;

    fn doubling_cfg(center: Real, threshold: Threshold) -> SimConfig {
        SimConfig::new(
            System::map(MapSpec::doubling()),
            Some(Observable::neglog(center).unwrap()),
            threshold,
        )
    }

    #[test]
    fn checkpoints_grid() {
        let mut c = doubling_cfg(Real::silver(), Threshold::Level { u: 1.0 });
        c.n_max = 100;
        assert_eq!(c.checkpoints(), vec![1, 2, 4, 8, 16, 32, 64, 100]);
        c.extra_checkpoints = vec![3];
        assert_eq!(c.checkpoints()[..4], [1, 2, 3, 4]);
    }

    #[test]
    fn single_step_is_phi_of_x0() {
        let mut c = doubling_cfg(Real::silver(), Threshold::Level { u: 1.0 });
        c.n_max = 1;
        c.orbits = 1;
        let recs = simulate_max_process(&c).unwrap();
        assert_eq!(recs[0].m_at_checkpoints.len(), 1);
        assert!(recs[0].m_at_checkpoints[0].1.is_finite());
    }

    #[test]
    fn doubling_survivor_matches_exact() {
        let mut c = doubling_cfg(Real::rational(crate::rational::qi(0)), Threshold::Radius { r: 0.25 });
        c.orbits = 100_000;
        let est = estimate_survivor(&c, 2, 0.25).unwrap();
        assert!(est.within(0.625, 3.0), "{est:?}");
    }

    #[test]
    fn infinite_levels() {
        let mut c = doubling_cfg(Real::silver(), Threshold::Level { u: f64::INFINITY });
        c.orbits = 50;
        let e = estimate_mn_law(&c, 100, f64::INFINITY).unwrap();
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
        let mut c = doubling_cfg(Real::silver(), Threshold::Level { u: f64::NEG_INFINITY });
        c.n_max = 100;
        c.orbits = 20;
        assert_eq!(eah_fraction(&c, 10).unwrap().estimate, 1.0);
    }

    struct Keys(u64);

    impl SourceFn<Vec<u64>> for Keys {
        fn call<S: KeySource>(self, mut s: S) -> Vec<u64> {
            (0..self.0)
                .map(|i| {
                    if i > 0 {
                        s.step();
                    }
                    s.key()
                })
                .collect()
        }
    }

    #[test]
    fn violations_match_brute_force() {
        let fam = ThresholdFamily::cloglog(1.0).unwrap();
        let mut c = doubling_cfg(Real::silver(), Threshold::Family { family: fam.clone() });
        c.n_max = 3000;
        c.orbits = 40;
        c.n_min = 20;
        let every = simulate_max_process(&c).unwrap();
        c.violation_scan = ViolationScan::Checkpoints;
        let cp = simulate_max_process(&c).unwrap();
        let setup = c.setup().unwrap();
        let checkpoints = c.checkpoints();
        let bound = |n: u64| setup.mass_key(fam.mu(n).unwrap()).unwrap();
        for (i, (rc, re)) in cp.iter().zip(&every).enumerate() {
            assert_eq!(rc.m_at_checkpoints, re.m_at_checkpoints);
            assert!(rc.m_at_checkpoints.windows(2).all(|w| w[0].1 <= w[1].1));
            let keys = setup.with_source(c.seed, i as u64, c.n_max, Keys(c.n_max));
            let mut m = u64::MAX;
            let mut viol = vec![];
            for (j, k) in keys.iter().enumerate() {
                let n = j as u64 + 1;
                m = m.min(*k);
                if n >= 20 && bound(n) <= m {
                    viol.push(n);
                }
            }
            assert_eq!(re.first_violation_n, viol.first().copied());
            assert_eq!(re.last_violation_n, viol.last().copied());
            let at_cp: Vec<u64> = viol.iter().copied().filter(|n| checkpoints.contains(n)).collect();
            assert_eq!(rc.first_violation_n, at_cp.first().copied());
            assert_eq!(rc.last_violation_n, at_cp.last().copied());
            assert_eq!(rc.eah_up_to_horizon, rc.last_violation_n.is_none());
            assert!(!re.eah_up_to_horizon || rc.eah_up_to_horizon);
        }
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let fam = ThresholdFamily::cloglog(1.0).unwrap();
        let mut c = doubling_cfg(Real::silver(), Threshold::Family { family: fam });
        c.n_max = 2000;
        c.orbits = 40;
        let a = with_workers(1, || simulate_max_process(&c)).unwrap().unwrap();
        let b = with_workers(3, || simulate_max_process(&c)).unwrap().unwrap();
        assert_eq!(a, b);
    }
}
