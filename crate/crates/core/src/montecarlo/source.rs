//! Orbit sources: each step exposes a `u64` key that is smaller the closer the current
//! point is to the target (maps) or the larger the current value is (processes).

use num_bigint::BigInt;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{BallSide, MapKind, MapSpec, MeasureModel, MeasureSpec, Observable};
use crate::precision::{BigFixed, PrecisionMode};
use crate::processes::{pareto_sample, Process};
use crate::rational;
use crate::rng::{open_unit, stream_rng, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum System {
    Map {
        map: MapSpec,
        /// Defaults to the natural invariant measure of the map.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        measure: Option<MeasureSpec>,
    },
    Process { process: Process },
}

impl System {
    pub fn map(map: MapSpec) -> Self {
        System::Map { map, measure: None }
    }

    /// `pareto`, `moving-max:2`, or any map accepted by [`MapSpec::parse`].
    pub fn parse(s: &str) -> Result<Self> {
        if s == "pareto" {
            return Ok(System::Process {
                process: Process::ParetoIid,
            });
        }
        if let Some(a) = s.strip_prefix("moving-max:") {
            let a: f64 = a
                .parse()
                .map_err(|_| Error::invalid(format!("bad moving-max parameter {a:?}")))?;
            crate::processes::moving_max_theta(a)?;
            return Ok(System::Process {
                process: Process::MovingMax { a },
            });
        }
        Ok(System::map(MapSpec::parse(s)?))
    }

    pub fn name(&self) -> String {
        match self {
            System::Map { map, .. } => map.name(),
            System::Process { process } => match process {
                Process::ParetoIid => "pareto".into(),
                Process::MovingMax { a } => format!("moving-max({a})"),
            },
        }
    }

    pub fn default_precision(&self) -> PrecisionMode {
        match self {
            System::Map { map, .. } => match map.kind {
                MapKind::Doubling | MapKind::TimesB { .. } | MapKind::Gauss => {
                    PrecisionMode::ExactSymbolic
                }
                MapKind::AffineMarkov { .. } if full_branches(map).is_some() => {
                    PrecisionMode::ExactSymbolic
                }
                _ => PrecisionMode::Float64,
            },
            System::Process { .. } => PrecisionMode::Float64,
        }
    }
}

/// Knobs for the float sources.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloatKnobs {
    pub burn_in: u64,
}

impl Default for FloatKnobs {
    fn default() -> Self {
        FloatKnobs { burn_in: 10_000 }
    }
}

pub(crate) trait KeySource {
    /// Key of the current point.
    fn key(&self) -> u64;
    /// Current point as a float (for maps) or value (for processes).
    fn point(&self) -> f64;
    fn step(&mut self);
}

/// Key conversions shared by every orbit of a configuration.
#[derive(Clone, Debug)]
pub(crate) enum KeyScale {
    /// `key = |x − c|` in units of `base^-digits`.
    Window { unit: f64 },
    /// `key = dist.to_bits()`
    FloatDist,
    /// `key = !value.to_bits()`
    Value,
}

impl KeyScale {
    /// Key bound with `key < bound ⇔ dist < r`.
    pub fn radius_key(&self, r: f64) -> u64 {
        match self {
            KeyScale::Window { unit } => {
                if !(r > 0.0) {
                    0
                } else {
                    let k = (r / unit).ceil();
                    if k >= u64::MAX as f64 {
                        u64::MAX
                    } else {
                        k as u64
                    }
                }
            }
            KeyScale::FloatDist => {
                if r.is_nan() || r <= 0.0 {
                    0
                } else if r == f64::INFINITY {
                    u64::MAX
                } else {
                    r.to_bits()
                }
            }
            KeyScale::Value => panic!("value-keyed sources take levels"),
        }
    }

    pub fn key_dist(&self, key: u64) -> f64 {
        match self {
            KeyScale::Window { unit } => {
                if key == u64::MAX {
                    f64::INFINITY
                } else {
                    key as f64 * unit
                }
            }
            KeyScale::FloatDist => f64::from_bits(key),
            KeyScale::Value => panic!("value-keyed sources have no distances"),
        }
    }
}

/// Everything needed to build sources and translate thresholds.
#[derive(Clone, Debug)]
pub(crate) struct Setup {
    pub system: System,
    pub observable: Option<Observable>,
    pub measure: Option<MeasureModel>,
    pub precision: PrecisionMode,
    pub knobs: FloatKnobs,
    pub scale: KeyScale,
}

fn full_branches(map: &MapSpec) -> Option<Vec<(f64, f64, bool)>> {
    let branches = map.affine_branches()?;
    let mut out = Vec::new();
    for b in &branches {
        let (lo, hi) = b.image();
        if lo != rational::qi(0) || hi != rational::qi(1) {
            return None;
        }
        out.push((
            rational::to_f64(&b.lo),
            rational::to_f64(&b.hi),
            b.slope > rational::qi(0),
        ));
    }
    Some(out)
}

fn window_digits(base: u32) -> u32 {
    let mut d = 0;
    let mut v: u128 = 1;
    while v * base as u128 <= u64::MAX as u128 {
        v *= base as u128;
        d += 1;
    }
    d
}

impl Setup {
    pub fn new(
        system: &System,
        observable: Option<&Observable>,
        precision: Option<PrecisionMode>,
        knobs: FloatKnobs,
    ) -> Result<Self> {
        let precision = precision.unwrap_or_else(|| system.default_precision());
        let (measure, scale) = match system {
            System::Map { map, measure } => {
                map.validate()?;
                if observable.is_none() {
                    return Err(Error::invalid("map systems need an observable"));
                }
                let spec = measure.clone().unwrap_or_else(|| MeasureSpec::natural_for(map));
                let model = spec.resolve(map)?;
                let scale = match (&map.kind, precision) {
                    (MapKind::Doubling | MapKind::TimesB { .. }, PrecisionMode::ExactSymbolic) => {
                        let b = map.digit_base().unwrap();
                        let unit = if b == 2 {
                            2f64.powi(-64)
                        } else {
                            (b as f64).powi(-(window_digits(b) as i32))
                        };
                        KeyScale::Window { unit }
                    }
                    (MapKind::Doubling | MapKind::TimesB { .. }, _) => {
                        return Err(Error::Unsupported(format!(
                            "{} orbits collapse in finite precision; use exact-symbolic digit streams",
                            map.name()
                        )))
                    }
                    (MapKind::Lsv { .. }, PrecisionMode::ExactSymbolic | PrecisionMode::BigFloat { .. }) => {
                        return Err(Error::Unsupported(
                            "LSV orbits are simulated in Float64 only".into(),
                        ))
                    }
                    (MapKind::Logistic { .. }, PrecisionMode::ExactSymbolic) => {
                        return Err(Error::Unsupported(
                            "logistic orbits have no symbolic model; use float64 or bigfloat".into(),
                        ))
                    }
                    (MapKind::AffineMarkov { .. }, PrecisionMode::ExactSymbolic)
                        if full_branches(map).is_none() =>
                    {
                        return Err(Error::Unsupported(
                            "symbolic orbits need every affine branch to be onto [0,1)".into(),
                        ))
                    }
                    _ => KeyScale::FloatDist,
                };
                if let MapKind::AffineMarkov { .. } = map.kind {
                    if precision == PrecisionMode::ExactSymbolic && model != MeasureModel::Lebesgue {
                        return Err(Error::Unsupported(
                            "symbolic affine orbits sample Lebesgue measure".into(),
                        ));
                    }
                }
                (Some(model), scale)
            }
            System::Process { process } => {
                if let Process::MovingMax { a } = process {
                    crate::processes::moving_max_theta(*a)?;
                }
                (None, KeyScale::Value)
            }
        };
        Ok(Setup {
            system: system.clone(),
            observable: observable.cloned(),
            measure,
            precision,
            knobs,
            scale,
        })
    }

    pub fn observable(&self) -> Option<&Observable> {
        self.observable.as_ref()
    }

    /// Key bound for the level `u`: a step is an exceedance iff `key < level_key(u)`.
    pub fn level_key(&self, u: f64) -> u64 {
        match (&self.scale, &self.observable) {
            (KeyScale::Value, _) => {
                if u == f64::NEG_INFINITY {
                    u64::MAX
                } else if u == f64::INFINITY {
                    0
                } else {
                    !u.to_bits()
                }
            }
            (scale, Some(obs)) => {
                if u == f64::NEG_INFINITY {
                    u64::MAX
                } else {
                    scale.radius_key(obs.radius_for_level(u))
                }
            }
            _ => unreachable!("maps always carry an observable"),
        }
    }

    pub fn radius_key(&self, r: f64) -> u64 {
        self.scale.radius_key(r)
    }

    /// Value of `φ` (or of the process) at a key.
    pub fn key_value(&self, key: u64) -> f64 {
        match (&self.scale, &self.observable) {
            (KeyScale::Value, _) => f64::from_bits(!key),
            (scale, Some(obs)) => {
                let d = scale.key_dist(key);
                if d == f64::INFINITY {
                    f64::NEG_INFINITY
                } else {
                    obs.psi(d)
                }
            }
            _ => unreachable!(),
        }
    }

    /// Level `u_n` matching a tail mass `μ_n` of a single observation.
    pub fn level_for_mass(&self, mass: f64) -> Result<f64> {
        match &self.system {
            System::Map { .. } => {
                let obs = self.observable.as_ref().unwrap();
                let r = crate::maps::radius_from_mu_target(self.measure.as_ref().unwrap(), obs, mass)?;
                Ok(obs.level_for_radius(r))
            }
            System::Process { process } => {
                if !(mass > 0.0 && mass < 1.0) {
                    return Err(Error::invalid(format!("tail mass {mass} outside (0,1)")));
                }
                Ok(match process {
                    Process::ParetoIid => 1.0 / mass,
                    Process::MovingMax { a } => {
                        // P(Y > u) = (1+a)/u − a/u² = mass
                        let b = 1.0 + a;
                        (b + (b * b - 4.0 * a * mass).sqrt()) / (2.0 * mass)
                    }
                })
            }
        }
    }

    /// Key bound for a tail mass, going through the radius directly for maps.
    pub fn mass_key(&self, mass: f64) -> Result<u64> {
        match &self.system {
            System::Map { .. } => {
                let obs = self.observable.as_ref().unwrap();
                let r = crate::maps::radius_from_mu_target(self.measure.as_ref().unwrap(), obs, mass)?;
                Ok(self.radius_key(r))
            }
            System::Process { .. } => Ok(self.level_key(self.level_for_mass(mass)?)),
        }
    }

    /// Calls `f` with the monomorphic source of one orbit.
    pub fn with_source<T>(&self, seed: u64, stream: u64, len_hint: u64, f: impl SourceFn<T>) -> T {
        let mut rng = stream_rng(seed, stream);
        match &self.system {
            System::Process { process } => match *process {
                Process::ParetoIid => f.call(ParetoSource::new(rng)),
                Process::MovingMax { a } => f.call(MovingMaxSource::new(a, rng)),
            },
            System::Map { map, .. } => {
                let obs = self.observable.clone().unwrap();
                match (&map.kind, self.precision) {
                    (MapKind::Doubling, PrecisionMode::ExactSymbolic) => {
                        f.call(BitWindow::new(&obs, rng))
                    }
                    (MapKind::TimesB { b }, PrecisionMode::ExactSymbolic) => {
                        f.call(DigitWindow::new(*b, &obs, rng))
                    }
                    (MapKind::Gauss, PrecisionMode::ExactSymbolic) => {
                        f.call(Backward::new(GaussDigits::new(&mut rng), obs, rng, len_hint))
                    }
                    (MapKind::AffineMarkov { .. }, PrecisionMode::ExactSymbolic) => {
                        let br = full_branches(map).expect("checked in Setup::new");
                        f.call(Backward::new(AffineSymbols::new(br), obs, rng, len_hint))
                    }
                    (_, PrecisionMode::BigFloat { bits }) => {
                        let x0 = self.sample_initial(&mut rng);
                        f.call(BigSource::new(map.clone(), x0, bits, obs, rng))
                    }
                    _ => {
                        let x0 = self.sample_initial(&mut rng);
                        f.call(FloatSource::new(
                            map.clone(),
                            self.measure.clone().unwrap(),
                            x0,
                            self.knobs.burn_in,
                            obs,
                            rng,
                        ))
                    }
                }
            }
        }
    }

    fn sample_initial(&self, rng: &mut StreamRng) -> f64 {
        self.measure.as_ref().unwrap().inverse_cdf(rng.gen::<f64>())
    }
}

/// A generic callback over sources (closures cannot be generic).
pub(crate) trait SourceFn<T> {
    fn call<S: KeySource>(self, s: S) -> T;
}

// ---- b-adic digit windows ----

fn side_key(w: u64, c: u64, side: BallSide) -> u64 {
    match side {
        BallSide::TwoSided => w.abs_diff(c),
        BallSide::RightOnly => {
            if w >= c {
                w - c
            } else {
                u64::MAX
            }
        }
        BallSide::LeftOnly => {
            if w <= c {
                c - w
            } else {
                u64::MAX
            }
        }
    }
}

/// Doubling orbit as a 64-bit window `⌊x_k 2^64⌋` over i.i.d. fair bits.
pub(crate) struct BitWindow {
    w: u64,
    pool: u64,
    left: u32,
    center: u64,
    side: BallSide,
    rng: StreamRng,
}

impl BitWindow {
    fn new(obs: &Observable, mut rng: StreamRng) -> Self {
        let w = rng.next_u64();
        BitWindow {
            w,
            pool: 0,
            left: 0,
            center: obs.center.fixed64(),
            side: obs.side,
            rng,
        }
    }
}

impl KeySource for BitWindow {
    #[inline]
    fn key(&self) -> u64 {
        side_key(self.w, self.center, self.side)
    }

    fn point(&self) -> f64 {
        self.w as f64 * 2f64.powi(-64)
    }

    #[inline]
    fn step(&mut self) {
        if self.left == 0 {
            self.pool = self.rng.next_u64();
            self.left = 64;
        }
        self.w = (self.w << 1) | (self.pool & 1);
        self.pool >>= 1;
        self.left -= 1;
    }
}

/// `x ↦ bx mod 1` as a window of `D` base-`b` digits, `D` maximal with `b^D < 2^64`.
pub(crate) struct DigitWindow {
    v: u64,
    base: u64,
    /// `b^(D−1)`
    top: u64,
    center: u64,
    side: BallSide,
    rng: StreamRng,
}

impl DigitWindow {
    fn new(base: u32, obs: &Observable, mut rng: StreamRng) -> Self {
        let d = window_digits(base);
        let top = (base as u64).pow(d - 1);
        let modulus = top as u128 * base as u128;
        let mut v = 0u64;
        for _ in 0..d {
            v = v * base as u64 + rng.gen_range(0..base as u64);
        }
        // ⌊c b^D⌋ from the exact 64-bit fixed-point center
        let center = ((obs.center.fixed64() as u128 * modulus) >> 64) as u64;
        DigitWindow {
            v,
            base: base as u64,
            top,
            center,
            side: obs.side,
            rng,
        }
    }
}

impl KeySource for DigitWindow {
    #[inline]
    fn key(&self) -> u64 {
        side_key(self.v, self.center, self.side)
    }

    fn point(&self) -> f64 {
        self.v as f64 / (self.top as f64 * self.base as f64)
    }

    #[inline]
    fn step(&mut self) {
        let d = self.rng.gen_range(0..self.base);
        self.v = (self.v % self.top) * self.base + d;
    }
}

// ---- backward recursion over exactly sampled symbols ----

/// Symbol dynamics whose points are recovered by inverse branches from the future.
pub(crate) trait Symbols {
    fn next_symbol(&mut self, rng: &mut StreamRng) -> u64;
    /// A sample of the point at the current position given the symbols so far.
    fn terminal(&self, rng: &mut StreamRng) -> f64;
    /// Inverse branch: the point with symbol `s` whose image is `y`.
    fn inverse(&self, s: u64, y: f64) -> f64;
    /// Steps after which the effect of the terminal value is below `2^-64`.
    fn lookahead(&self) -> usize;
}

pub(crate) struct GaussDigits {
    s: f64,
}

impl GaussDigits {
    fn new(rng: &mut StreamRng) -> Self {
        GaussDigits {
            s: 2f64.powf(rng.gen::<f64>()) - 1.0,
        }
    }

    fn conditional(&self, u: f64) -> f64 {
        u / (1.0 + self.s * (1.0 - u))
    }
}

impl Symbols for GaussDigits {
    #[inline]
    fn next_symbol(&mut self, rng: &mut StreamRng) -> u64 {
        let t = self.conditional(open_unit(rng));
        let a = (1.0 / t).floor().clamp(1.0, 1e18);
        self.s = 1.0 / (a + self.s);
        a as u64
    }

    fn terminal(&self, rng: &mut StreamRng) -> f64 {
        self.conditional(open_unit(rng)).min(1.0 - f64::EPSILON)
    }

    #[inline]
    fn inverse(&self, a: u64, y: f64) -> f64 {
        1.0 / (a as f64 + y)
    }

    fn lookahead(&self) -> usize {
        48
    }
}

pub(crate) struct AffineSymbols {
    /// `(lo, hi, increasing)` per branch, each onto `[0,1)`.
    branches: Vec<(f64, f64, bool)>,
}

impl AffineSymbols {
    fn new(branches: Vec<(f64, f64, bool)>) -> Self {
        AffineSymbols { branches }
    }
}

impl Symbols for AffineSymbols {
    #[inline]
    fn next_symbol(&mut self, rng: &mut StreamRng) -> u64 {
        let u = rng.gen::<f64>();
        let i = self.branches.partition_point(|b| b.1 <= u);
        i.min(self.branches.len() - 1) as u64
    }

    fn terminal(&self, rng: &mut StreamRng) -> f64 {
        rng.gen::<f64>()
    }

    #[inline]
    fn inverse(&self, s: u64, y: f64) -> f64 {
        let (lo, hi, inc) = self.branches[s as usize];
        if inc {
            lo + (hi - lo) * y
        } else {
            hi - (hi - lo) * y
        }
    }

    fn lookahead(&self) -> usize {
        64
    }
}

pub(crate) struct Backward<S: Symbols> {
    symbols: S,
    /// Symbols of positions `base .. base + pending.len()`.
    pending: Vec<u64>,
    points: Vec<f64>,
    pos: usize,
    chunk: usize,
    obs: Observable,
    rng: StreamRng,
}

impl<S: Symbols> Backward<S> {
    fn new(symbols: S, obs: Observable, rng: StreamRng, len_hint: u64) -> Self {
        let chunk = (len_hint.max(1) as usize).min(4096);
        let mut b = Backward {
            symbols,
            pending: Vec::new(),
            points: Vec::new(),
            pos: 0,
            chunk,
            obs,
            rng,
        };
        b.refill();
        b
    }

    fn refill(&mut self) {
        let need = self.chunk + self.symbols.lookahead();
        // drop the symbols of the points already emitted
        let used = self.points.len().min(self.pending.len());
        self.pending.drain(..used);
        while self.pending.len() < need {
            let s = self.symbols.next_symbol(&mut self.rng);
            self.pending.push(s);
        }
        let mut y = self.symbols.terminal(&mut self.rng);
        let mut pts = vec![0.0; need];
        for i in (0..need).rev() {
            y = self.symbols.inverse(self.pending[i], y);
            pts[i] = y;
        }
        pts.truncate(self.chunk);
        self.points = pts;
        self.pos = 0;
    }
}

impl<S: Symbols> KeySource for Backward<S> {
    #[inline]
    fn key(&self) -> u64 {
        self.obs.dist(self.points[self.pos]).to_bits()
    }

    fn point(&self) -> f64 {
        self.points[self.pos]
    }

    #[inline]
    fn step(&mut self) {
        self.pos += 1;
        if self.pos == self.points.len() {
            self.refill();
        }
    }
}

// ---- float and fixed-point iteration ----

pub(crate) struct FloatSource {
    x: f64,
    kind: MapKind,
    map: MapSpec,
    measure: MeasureModel,
    obs: Observable,
    rng: StreamRng,
}

impl FloatSource {
    fn new(
        map: MapSpec,
        measure: MeasureModel,
        x0: f64,
        burn_in: u64,
        obs: Observable,
        rng: StreamRng,
    ) -> Self {
        let mut s = FloatSource {
            x: x0,
            kind: map.kind.clone(),
            map,
            measure,
            obs,
            rng,
        };
        for _ in 0..burn_in {
            s.step();
        }
        s
    }

    #[inline]
    fn apply(&self, x: f64) -> f64 {
        match self.kind {
            MapKind::Lsv { a } => {
                if x < 0.5 {
                    let g = if a == 0.5 { (2.0 * x).sqrt() } else { (2.0 * x).powf(a) };
                    x * (1.0 + g)
                } else {
                    2.0 * x - 1.0
                }
            }
            MapKind::Logistic { a } => a * x * (1.0 - x),
            MapKind::Gauss => crate::maps::gauss_f64(x),
            _ => self.map.eval_f64(x).unwrap_or(0.0),
        }
    }
}

impl KeySource for FloatSource {
    #[inline]
    fn key(&self) -> u64 {
        self.obs.dist(self.x).to_bits()
    }

    fn point(&self) -> f64 {
        self.x
    }

    #[inline]
    fn step(&mut self) {
        let y = self.apply(self.x);
        // float orbits can land on a fixed point such as 0 and stay there; restart
        // from the measure instead
        self.x = if y > 0.0 && y < 1.0 {
            y
        } else {
            self.measure.inverse_cdf(self.rng.gen::<f64>())
        };
    }
}

pub(crate) struct BigSource {
    x: BigFixed,
    xf: f64,
    map: MapSpec,
    obs: Observable,
}

impl BigSource {
    fn new(map: MapSpec, x0: f64, bits: u32, obs: Observable, mut rng: StreamRng) -> Self {
        let mut x = BigFixed::from_f64(x0, bits);
        if bits > 53 {
            // random low-order bits below the f64 mantissa
            let extra = bits - 53;
            let mut noise = BigInt::from(0);
            for _ in 0..extra.div_ceil(64) {
                noise = (noise << 64usize) + rng.next_u64();
            }
            x.value += noise >> ((64 - extra % 64) % 64) as usize;
        }
        let xf = x.to_f64();
        BigSource { x, xf, map, obs }
    }
}

impl KeySource for BigSource {
    fn key(&self) -> u64 {
        self.obs.dist(self.xf).to_bits()
    }

    fn point(&self) -> f64 {
        self.xf
    }

    fn step(&mut self) {
        if let Ok(y) = self.map.eval_big(&self.x) {
            self.x = y;
            self.xf = self.x.to_f64();
        }
    }
}

// ---- processes ----

pub(crate) struct ParetoSource {
    x: f64,
    rng: StreamRng,
}

impl ParetoSource {
    fn new(mut rng: StreamRng) -> Self {
        ParetoSource {
            x: pareto_sample(&mut rng),
            rng,
        }
    }
}

impl KeySource for ParetoSource {
    #[inline]
    fn key(&self) -> u64 {
        !self.x.to_bits()
    }

    fn point(&self) -> f64 {
        self.x
    }

    #[inline]
    fn step(&mut self) {
        self.x = pareto_sample(&mut self.rng);
    }
}

/// `Y_k = max(X_k, a X_{k+1})` with the next `X` held in `ahead`.
pub(crate) struct MovingMaxSource {
    a: f64,
    x: f64,
    ahead: f64,
    rng: StreamRng,
}

impl MovingMaxSource {
    fn new(a: f64, mut rng: StreamRng) -> Self {
        let x = pareto_sample(&mut rng);
        let ahead = pareto_sample(&mut rng);
        MovingMaxSource { a, x, ahead, rng }
    }

    fn y(&self) -> f64 {
        self.x.max(self.a * self.ahead)
    }
}

impl KeySource for MovingMaxSource {
    #[inline]
    fn key(&self) -> u64 {
        !self.y().to_bits()
    }

    fn point(&self) -> f64 {
        self.y()
    }

    #[inline]
    fn step(&mut self) {
        self.x = self.ahead;
        self.ahead = pareto_sample(&mut self.rng);
    }
}
