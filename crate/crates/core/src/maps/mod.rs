//! Interval maps: affine Markov maps, the b-adic maps, the Gauss map, the
//! Liverani-Saussol-Vaienti intermittent map and the logistic family.

mod measure;
mod observable;

pub use measure::{radius_from_mu_target, radius_from_mu_target_exact, MeasureModel, MeasureSpec, UlamDensity};
pub use observable::{BallSide, Observable, Psi};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::IntervalSet;
use crate::precision::{BigFixed, Point, PrecisionMode};
use crate::rational::{self, qi, Q};

/// `x ↦ slope·x + intercept` on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineBranch {
    #[serde(with = "crate::rational::wire")]
    pub lo: Q,
    #[serde(with = "crate::rational::wire")]
    pub hi: Q,
    #[serde(with = "crate::rational::wire")]
    pub slope: Q,
    #[serde(with = "crate::rational::wire")]
    pub intercept: Q,
}

impl AffineBranch {
    pub fn apply(&self, x: &Q) -> Q {
        &self.slope * x + &self.intercept
    }

    /// Image of the branch domain as a half-open interval `[lo, hi)`.
    pub fn image(&self) -> (Q, Q) {
        let a = self.apply(&self.lo);
        let b = self.apply(&self.hi);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Branch-local preimage of `[a, b)`, as a half-open interval.
    pub fn pull_back(&self, a: &Q, b: &Q) -> Option<(Q, Q)> {
        let (ia, ib) = self.image();
        let a = a.max(&ia);
        let b = b.min(&ib);
        if a >= b {
            return None;
        }
        let xa = (a - &self.intercept) / &self.slope;
        let xb = (b - &self.intercept) / &self.slope;
        Some(if xa <= xb { (xa, xb) } else { (xb, xa) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapKind {
    AffineMarkov { branches: Vec<AffineBranch> },
    Doubling,
    TimesB { b: u32 },
    Gauss,
    Lsv { a: f64 },
    Logistic { a: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub kind: MapKind,
    #[serde(default)]
    pub expanding: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreimageOptions {
    /// Highest Gauss branch index enumerated.
    pub k_max: u64,
    pub fragment_cap: usize,
}

impl Default for PreimageOptions {
    fn default() -> Self {
        PreimageOptions {
            k_max: 1000,
            fragment_cap: crate::intervals::DEFAULT_FRAGMENT_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preimage {
    pub set: IntervalSet,
    /// Gauss only: invariant mass of `(0, 1/k_max)`, which contains every truncated branch.
    pub truncation_mass_bound: Option<f64>,
}

impl MapSpec {
    pub fn doubling() -> Self {
        MapSpec {
            kind: MapKind::Doubling,
            expanding: true,
        }
    }

    pub fn times_b(b: u32) -> Result<Self> {
        if b < 2 {
            return Err(Error::invalid("TimesB needs b >= 2"));
        }
        Ok(MapSpec {
            kind: MapKind::TimesB { b },
            expanding: true,
        })
    }

    pub fn gauss() -> Self {
        MapSpec {
            kind: MapKind::Gauss,
            expanding: false,
        }
    }

    pub fn lsv(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid(format!("LSV parameter {a} must lie in (0,1)")));
        }
        Ok(MapSpec {
            kind: MapKind::Lsv { a },
            expanding: false,
        })
    }

    pub fn logistic(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 4.0) {
            return Err(Error::invalid(format!("logistic parameter {a} must lie in (0,4]")));
        }
        Ok(MapSpec {
            kind: MapKind::Logistic { a },
            expanding: false,
        })
    }

    pub fn affine_markov(branches: Vec<AffineBranch>, expanding: bool) -> Result<Self> {
        let spec = MapSpec {
            kind: MapKind::AffineMarkov { branches },
            expanding,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `doubling`, `times:3`, `gauss`, `lsv:0.5`, `logistic:4`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::invalid(format!("map {name} needs a parameter")))?;
            Ok(rational::to_f64(&rational::parse_rational(a)?))
        };
        match name {
            "doubling" => Ok(MapSpec::doubling()),
            "times" | "timesb" => {
                let b = arg
                    .ok_or_else(|| Error::invalid("times:b needs b"))?
                    .parse()
                    .map_err(|_| Error::invalid("bad base"))?;
                MapSpec::times_b(b)
            }
            "gauss" => Ok(MapSpec::gauss()),
            "lsv" => MapSpec::lsv(num(arg)?),
            "logistic" => MapSpec::logistic(num(arg)?),
            _ => Err(Error::invalid(format!("unknown map {s:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            MapKind::AffineMarkov { branches } => {
                if branches.is_empty() {
                    return Err(Error::invalid("affine map without branches"));
                }
                let mut sorted: Vec<&AffineBranch> = branches.iter().collect();
                sorted.sort_by(|a, b| a.lo.cmp(&b.lo));
                let mut edge = Q::zero();
                for br in sorted {
                    if br.lo != edge {
                        return Err(Error::invalid("branch domains do not partition [0,1)"));
                    }
                    if br.hi <= br.lo {
                        return Err(Error::invalid("empty branch domain"));
                    }
                    if br.slope.is_zero() {
                        return Err(Error::invalid("zero slope"));
                    }
                    if self.expanding && br.slope.abs() <= Q::one() {
                        return Err(Error::invalid("expanding map with |slope| <= 1"));
                    }
                    let (a, b) = br.image();
                    if a < Q::zero() || b > Q::one() {
                        return Err(Error::invalid("branch image leaves [0,1]"));
                    }
                    edge = br.hi.clone();
                }
                if edge != Q::one() {
                    return Err(Error::invalid("branch domains do not cover [0,1)"));
                }
                Ok(())
            }
            MapKind::TimesB { b } if *b < 2 => Err(Error::invalid("TimesB needs b >= 2")),
            MapKind::Lsv { a } if !(*a > 0.0 && *a < 1.0) => {
                Err(Error::invalid("LSV parameter must lie in (0,1)"))
            }
            MapKind::Logistic { a } if !(*a > 0.0 && *a <= 4.0) => {
                Err(Error::invalid("logistic parameter must lie in (0,4]"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::AffineMarkov { branches } => format!("affine({} branches)", branches.len()),
            MapKind::Doubling => "doubling".into(),
            MapKind::TimesB { b } => format!("times{b}"),
            MapKind::Gauss => "gauss".into(),
            MapKind::Lsv { a } => format!("lsv({a})"),
            MapKind::Logistic { a } => format!("logistic({a})"),
        }
    }

    /// Base of the digit expansion for the b-adic maps.
    pub fn digit_base(&self) -> Option<u32> {
        match self.kind {
            MapKind::Doubling => Some(2),
            MapKind::TimesB { b } => Some(b),
            _ => None,
        }
    }

    /// Exact affine branches for the piecewise-affine kinds.
    pub fn affine_branches(&self) -> Option<Vec<AffineBranch>> {
        match &self.kind {
            MapKind::AffineMarkov { branches } => {
                let mut v = branches.clone();
                v.sort_by(|a, b| a.lo.cmp(&b.lo));
                Some(v)
            }
            MapKind::Doubling | MapKind::TimesB { .. } => {
                let b = self.digit_base().unwrap() as i64;
                Some(
                    (0..b)
                        .map(|k| AffineBranch {
                            lo: rational::q(k, b),
                            hi: rational::q(k + 1, b),
                            slope: qi(b),
                            intercept: qi(-k),
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }

    fn require_affine(&self) -> Result<Vec<AffineBranch>> {
        self.affine_branches()
            .ok_or_else(|| Error::Unsupported(format!("{} is not piecewise affine", self.name())))
    }

    /// Whether Lebesgue measure is invariant (every point has preimage slopes summing to one).
    pub fn preserves_lebesgue(&self) -> bool {
        match self.kind {
            MapKind::Doubling | MapKind::TimesB { .. } => true,
            MapKind::AffineMarkov { .. } => {
                let branches = self.affine_branches().unwrap();
                // full branches with sum of 1/|slope| equal to one
                let full = branches
                    .iter()
                    .all(|b| b.image() == (Q::zero(), Q::one()));
                let total: Q = branches.iter().map(|b| Q::one() / b.slope.abs()).sum();
                full && total == Q::one()
            }
            _ => false,
        }
    }

    fn check_domain(x: f64) -> Result<()> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!("{x}")))
        }
    }

    fn check_domain_q(x: &Q) -> Result<()> {
        if x >= &Q::zero() && x <= &Q::one() {
            Ok(())
        } else {
            Err(Error::OutOfDomain(rational::fmt_q(x)))
        }
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        match x {
            Point::Exact(q) => self.eval_exact(q).map(Point::Exact),
            Point::Float(v) => self.eval_f64(*v).map(Point::Float),
            Point::Big(b) => self.eval_big(b).map(Point::Big),
        }
    }

    /// Evaluates at a real parameter in the requested regime.
    pub fn eval_at(&self, x: &crate::real::Real, mode: PrecisionMode) -> Result<Point> {
        let p = match (mode, x.as_rational()) {
            (PrecisionMode::ExactSymbolic, Some(q)) => Point::Exact(q.clone()),
            (PrecisionMode::ExactSymbolic, None) => {
                return Err(Error::Unsupported(
                    "exact evaluation needs a rational point".into(),
                ))
            }
            (PrecisionMode::Float64, _) => Point::Float(x.to_f64()),
            (PrecisionMode::BigFloat { bits }, Some(q)) => Point::Big(BigFixed::from_q(q, bits)),
            (PrecisionMode::BigFloat { bits }, None) => {
                Point::Big(BigFixed::from_q(&quadratic_or_float_q(x, bits), bits))
            }
        };
        self.eval(&p)
    }

    /// Rational evaluation. Branch boundaries follow the half-open convention; the
    /// right end `x = 1` uses the closure of the last branch, and `G(0) = 0`.
    pub fn eval_exact(&self, x: &Q) -> Result<Q> {
        Self::check_domain_q(x)?;
        match &self.kind {
            MapKind::Gauss => {
                if x.is_zero() {
                    return Ok(Q::zero());
                }
                let inv = x.recip();
                Ok(&inv - inv.floor())
            }
            MapKind::Logistic { a } => {
                let a = rational::from_f64(*a)?;
                Ok(a * x * (Q::one() - x))
            }
            MapKind::Lsv { .. } => Err(Error::Unsupported(
                "LSV values are irrational; use a floating regime".into(),
            )),
            _ => {
                let branches = self.require_affine()?;
                let idx = branches.partition_point(|b| &b.lo <= x).max(1) - 1;
                Ok(branches[idx].apply(x))
            }
        }
    }

    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(match &self.kind {
            MapKind::Doubling => {
                let y = 2.0 * x;
                if y >= 1.0 && x < 1.0 {
                    y - 1.0
                } else if x == 1.0 {
                    1.0
                } else {
                    y
                }
            }
            MapKind::TimesB { b } => {
                let b = *b as f64;
                let y = b * x;
                let k = y.floor().min(b - 1.0);
                y - k
            }
            MapKind::Gauss => gauss_f64(x),
            MapKind::Lsv { a } => lsv_f64(x, *a),
            MapKind::Logistic { a } => a * x * (1.0 - x),
            MapKind::AffineMarkov { .. } => {
                let branches = self.affine_branches().unwrap();
                let idx = branches
                    .partition_point(|b| rational::to_f64(&b.lo) <= x)
                    .max(1)
                    - 1;
                let br = &branches[idx];
                rational::to_f64(&br.slope) * x + rational::to_f64(&br.intercept)
            }
        })
    }

    /// Fixed-point evaluation: exact rational step followed by rounding down to `bits`.
    pub fn eval_big(&self, x: &BigFixed) -> Result<BigFixed> {
        match self.kind {
            MapKind::Lsv { .. } => Err(Error::Unsupported(
                "BigFloat evaluation of the LSV map is not implemented".into(),
            )),
            _ => Ok(BigFixed::from_q(&self.eval_exact(&x.to_q())?, x.bits)),
        }
    }

    /// `|f'(x)|`, or an error where the one-sided derivatives differ.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        match &self.kind {
            MapKind::Gauss => {
                if x == 0.0 {
                    return Err(Error::Discontinuity("0".into()));
                }
                Ok(1.0 / (x * x))
            }
            MapKind::Lsv { a } => {
                if x == 0.5 {
                    return Err(Error::Discontinuity("1/2".into()));
                }
                Ok(if x < 0.5 {
                    1.0 + (1.0 + a) * (2.0 * x).powf(*a)
                } else {
                    2.0
                })
            }
            MapKind::Logistic { a } => Ok((a * (1.0 - 2.0 * x)).abs()),
            _ => {
                let q = rational::from_f64(x)?;
                self.derivative_exact(&q).map(|d| rational::to_f64(&d))
            }
        }
    }

    /// Exact `|f'(x)|` for the kinds with rational derivatives.
    pub fn derivative_exact(&self, x: &Q) -> Result<Q> {
        Self::check_domain_q(x)?;
        match &self.kind {
            MapKind::Gauss => {
                if x.is_zero() {
                    return Err(Error::Discontinuity("0".into()));
                }
                Ok((x * x).recip())
            }
            MapKind::Logistic { a } => {
                let a = rational::from_f64(*a)?;
                Ok((a * (Q::one() - qi(2) * x)).abs())
            }
            MapKind::Lsv { .. } => Err(Error::Unsupported(
                "LSV derivative is irrational; use derivative()".into(),
            )),
            _ => {
                let branches = self.require_affine()?;
                let idx = branches.partition_point(|b| &b.lo <= x).max(1) - 1;
                let right = branches[idx].slope.abs();
                if idx > 0 && &branches[idx].lo == x {
                    let left = branches[idx - 1].slope.abs();
                    if left != right {
                        return Err(Error::Discontinuity(rational::fmt_q(x)));
                    }
                }
                Ok(right)
            }
        }
    }

    /// `f^{-1}(target)`. Gauss preimages enumerate branches `1..=k_max` only.
    pub fn branch_preimage(&self, target: &IntervalSet, opts: PreimageOptions) -> Result<Preimage> {
        match &self.kind {
            MapKind::Gauss => {
                if opts.k_max == 0 {
                    return Err(Error::invalid("k_max must be at least 1"));
                }
                let mut pieces = Vec::new();
                for k in (1..=opts.k_max).rev() {
                    let kq = Q::from_integer(BigInt::from(k));
                    for (a, b) in target.intervals() {
                        // 1/x - k in [a, b)  <=>  x in (1/(k+b), 1/(k+a)]
                        let lo = (&kq + b).recip();
                        let hi = (&kq + a).recip();
                        pieces.push((lo, hi));
                    }
                    if pieces.len() > opts.fragment_cap {
                        return Err(Error::FragmentCap {
                            cap: opts.fragment_cap,
                        });
                    }
                }
                let set = IntervalSet::from_intervals(pieces)
                    .with_cap(opts.fragment_cap)
                    .check_cap()?;
                let bound = (1.0 + 1.0 / opts.k_max as f64).log2();
                Ok(Preimage {
                    set,
                    truncation_mass_bound: Some(bound),
                })
            }
            _ => {
                let branches = self.require_affine()?;
                let set = affine_preimage(&branches, target, opts.fragment_cap)?;
                Ok(Preimage {
                    set,
                    truncation_mass_bound: None,
                })
            }
        }
    }

    /// First return to `[1/2, 1]` for the LSV map, iterated in double precision.
    pub fn induced_first_return(&self, x: f64, cap: u64) -> Result<(f64, u64)> {
        let a = match self.kind {
            MapKind::Lsv { a } => a,
            _ => {
                return Err(Error::Unsupported(
                    "induced first return is defined for the LSV map".into(),
                ))
            }
        };
        if !(0.5..=1.0).contains(&x) {
            return Err(Error::invalid(format!("{x} is not in the inducing base [1/2,1]")));
        }
        let mut y = x;
        for n in 1..=cap {
            y = lsv_f64(y, a);
            if y >= 0.5 {
                return Ok((y, n));
            }
        }
        Err(Error::ReturnTimeCap { cap })
    }
}

fn quadratic_or_float_q(x: &crate::real::Real, bits: u32) -> Q {
    use crate::real::Real;
    match x {
        Real::Quadratic { p, d, q } => {
            // floor(((p + sqrt d)/q) 2^bits) / 2^bits
            let big_p = BigInt::from(*p) << bits as usize;
            let s = (BigInt::from(*d) << (2 * bits) as usize).sqrt();
            let v = (big_p + s).div_floor(&BigInt::from(*q));
            Q::new(v, BigInt::one() << bits as usize)
        }
        other => rational::from_f64(other.to_f64()).unwrap_or_default(),
    }
}

/// Preimage under a list of affine branches sorted by domain.
pub(crate) fn affine_preimage(
    branches: &[AffineBranch],
    target: &IntervalSet,
    cap: usize,
) -> Result<IntervalSet> {
    let mut pieces = Vec::new();
    let mut sorted = true;
    for br in branches {
        let (ia, ib) = br.image();
        let range = target.overlapping(&ia, &ib);
        let slice = &target.intervals()[range];
        let start = pieces.len();
        for (a, b) in slice {
            if let Some(p) = br.pull_back(a, b) {
                pieces.push(p);
            }
        }
        if br.slope.is_negative() {
            pieces[start..].reverse();
        }
        if pieces.len() > cap {
            return Err(Error::FragmentCap { cap });
        }
        if start > 0 && pieces.len() > start && pieces[start].0 < pieces[start - 1].0 {
            sorted = false;
        }
    }
    let set = if sorted {
        IntervalSet::from_sorted(pieces)
    } else {
        IntervalSet::from_intervals(pieces)
    };
    set.with_cap(cap).check_cap()
}

pub fn gauss_f64(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let inv = 1.0 / x;
    inv - inv.floor()
}

pub fn lsv_f64(x: f64, a: f64) -> f64 {
    if x < 0.5 {
        x * (1.0 + (2.0 * x).powf(a))
    } else {
        2.0 * x - 1.0
    }
}
