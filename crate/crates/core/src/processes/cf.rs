//! Continued-fraction coefficient streams `a_k = ⌊1/G^{k-1}(x)⌋`.
//!
//! Random streams draw digits from the exact conditional law: if `x` is uniform on the
//! cylinder with convergent denominators `q_{k-1}, q_k`, then `t = G^k(x)` has CDF
//! `(1+s)t/(1+st)` with `s = q_{k-1}/q_k`, and `s` updates to `1/(a+s)`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational;
use crate::real::Real;
use crate::rng::{open_unit, resume, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CfSource {
    /// `x` uniform on `[0,1)`.
    RandomUniform { seed: u64, stream: u64 },
    /// `x` distributed by the Gauss measure, so the digit sequence is stationary.
    RandomGauss { seed: u64, stream: u64 },
    FixedPoint { x: Real },
}

mod big {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

mod u128_str {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
enum CfState {
    Chain {
        seed: u64,
        stream: u64,
        #[serde(with = "u128_str")]
        word_pos: u128,
        s: f64,
    },
    /// `x = num / den`
    Euclid {
        #[serde(with = "big")]
        num: BigInt,
        #[serde(with = "big")]
        den: BigInt,
    },
    /// `x = (p + sqrt(d)) / q` with `q | d − p²`
    Quadratic {
        #[serde(with = "big")]
        p: BigInt,
        #[serde(with = "big")]
        q: BigInt,
        #[serde(with = "big")]
        d: BigInt,
        #[serde(with = "big")]
        sqrt_d: BigInt,
    },
}

/// Lazily produced coefficients; serializes to a resumable JSON checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CfStream {
    pub source: CfSource,
    state: CfState,
    emitted: u64,
    running_max: u64,
    terminated: bool,
    /// Convergent denominators `q_{k-1}, q_k`, tracked only for float inputs.
    q_prev: f64,
    q_cur: f64,
    /// Half an ulp of a float input.
    delta: f64,
    trusted_depth: Option<u64>,
    #[serde(skip)]
    rng: Option<StreamRng>,
}

impl PartialEq for CfStream {
    fn eq(&self, o: &Self) -> bool {
        self.source == o.source
            && self.state == o.state
            && self.emitted == o.emitted
            && self.terminated == o.terminated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfPrefix {
    pub coefficients: Vec<u64>,
    /// `L_n = max_{i ≤ n} a_i`
    pub l_n: u64,
    pub terminated: bool,
    /// Number of leading digits that are exact digits of the input, when it is a float.
    pub trusted_depth: Option<u64>,
}

fn gauss_sample(rng: &mut StreamRng) -> f64 {
    2f64.powf(rng.gen::<f64>()) - 1.0
}

impl CfStream {
    pub fn new(source: CfSource) -> Result<Self> {
        let mut trusted_depth = None;
        let mut delta = 0.0;
        let state = match &source {
            CfSource::RandomUniform { seed, stream } => CfState::Chain {
                seed: *seed,
                stream: *stream,
                word_pos: 0,
                s: 0.0,
            },
            CfSource::RandomGauss { seed, stream } => {
                let mut rng = resume(*seed, *stream, 0);
                let s = gauss_sample(&mut rng);
                CfState::Chain {
                    seed: *seed,
                    stream: *stream,
                    word_pos: rng.get_word_pos(),
                    s,
                }
            }
            CfSource::FixedPoint { x } => match x {
                Real::Rational { value } => euclid(value)?,
                Real::Float { value } => {
                    trusted_depth = Some(0);
                    delta = 0.5 * (f64::from_bits(value.abs().to_bits() + 1) - value.abs());
                    euclid(&rational::from_f64(*value)?)?
                }
                Real::Quadratic { p, d, q } => {
                    let (p, d, q) = (BigInt::from(*p), BigInt::from(*d), BigInt::from(*q));
                    let sqrt_d = d.sqrt();
                    if &sqrt_d * &sqrt_d == d {
                        let v = rational::Q::new(p + sqrt_d, q);
                        euclid(&v)?
                    } else {
                        CfState::Quadratic {
                            p: &p * &q,
                            d: &d * &q * &q,
                            sqrt_d: (&d * &q * &q).sqrt(),
                            q: &q * &q,
                        }
                    }
                }
            },
        };
        Ok(CfStream {
            source,
            state,
            emitted: 0,
            running_max: 0,
            terminated: false,
            q_prev: 0.0,
            q_cur: 1.0,
            delta,
            trusted_depth,
            rng: None,
        })
    }

    pub fn random_uniform(seed: u64, stream: u64) -> Self {
        Self::new(CfSource::RandomUniform { seed, stream }).expect("random sources are valid")
    }

    pub fn random_gauss(seed: u64, stream: u64) -> Self {
        Self::new(CfSource::RandomGauss { seed, stream }).expect("random sources are valid")
    }

    pub fn fixed(x: Real) -> Result<Self> {
        Self::new(CfSource::FixedPoint { x })
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn running_max(&self) -> u64 {
        self.running_max
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn trusted_depth(&self) -> Option<u64> {
        self.trusted_depth
    }

    /// Next coefficient, `None` once a rational input is exhausted.
    pub fn next_digit(&mut self) -> Option<u64> {
        if self.terminated {
            return None;
        }
        let a = match &mut self.state {
            CfState::Chain {
                seed,
                stream,
                word_pos,
                s,
            } => {
                let rng = self.rng.get_or_insert_with(|| resume(*seed, *stream, *word_pos));
                let u = open_unit(rng);
                *word_pos = rng.get_word_pos();
                let t = u / (1.0 + *s * (1.0 - u));
                let a = (1.0 / t).floor().min(u64::MAX as f64).max(1.0);
                *s = 1.0 / (a + *s);
                a as u64
            }
            CfState::Euclid { num, den } => {
                if num.is_zero() {
                    self.terminated = true;
                    return None;
                }
                let (a, r) = den.div_rem(num);
                *den = std::mem::replace(num, r);
                a.to_u64().unwrap_or(u64::MAX)
            }
            CfState::Quadratic { p, q, d, sqrt_d } => {
                let q1 = (&*d - &*p * &*p) / &*q;
                let p1 = -&*p;
                let top = if q1.is_positive() {
                    &p1 + &*sqrt_d
                } else {
                    &p1 + &*sqrt_d + 1
                };
                let a = top.div_floor(&q1);
                *p = p1 - &a * &q1;
                *q = q1;
                a.to_u64().unwrap_or(u64::MAX)
            }
        };
        self.emitted += 1;
        self.running_max = self.running_max.max(a);
        if let Some(depth) = self.trusted_depth.as_mut() {
            let q_next = a as f64 * self.q_cur + self.q_prev;
            self.q_prev = self.q_cur;
            self.q_cur = q_next;
            // digit k is exact if x ± delta stays in the same depth-k cylinder, i.e. if
            // t = G^k(x) moved by delta (q_k + q_{k-1} t)^2 stays inside [0, 1)
            if let CfState::Euclid { num, den } = &self.state {
                let t = rational::to_f64(&rational::Q::new(num.clone(), den.clone()));
                let spread = self.delta * (self.q_cur + self.q_prev * t).powi(2);
                if *depth + 1 == self.emitted && t - spread > 0.0 && t + spread < 1.0 {
                    *depth = self.emitted;
                }
            }
        }
        Some(a)
    }

    /// Up to `n` further coefficients.
    pub fn take(&mut self, n: usize) -> CfPrefix {
        let mut coefficients = Vec::with_capacity(n);
        while coefficients.len() < n {
            match self.next_digit() {
                Some(a) => coefficients.push(a),
                None => break,
            }
        }
        CfPrefix {
            l_n: coefficients.iter().copied().max().unwrap_or(0),
            coefficients,
            terminated: self.terminated,
            trusted_depth: self.trusted_depth,
        }
    }

    pub fn checkpoint(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn restore(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

fn euclid(x: &rational::Q) -> Result<CfState> {
    if x.is_negative() || x > &rational::qi(1) {
        return Err(Error::invalid(format!(
            "continued fractions need x in [0,1], got {}",
            rational::fmt_q(x)
        )));
    }
    Ok(CfState::Euclid {
        num: x.numer().clone(),
        den: x.denom().clone(),
    })
}

/// The first `n` coefficients; errors if the stream ends sooner.
pub fn cf_coefficients(source: CfSource, n: usize) -> Result<CfPrefix> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let prefix = CfStream::new(source)?.take(n);
    if prefix.coefficients.len() < n {
        return Err(Error::Terminated {
            len: prefix.coefficients.len(),
        });
    }
    Ok(prefix)
}

pub fn write_coefficients_csv<W: std::io::Write>(w: W, coefficients: &[u64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "a_k", "l_k"])?;
    let mut l = 0;
    for (i, a) in coefficients.iter().enumerate() {
        l = l.max(*a);
        out.write_record([(i + 1).to_string(), a.to_string(), l.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
