//! Real-valued parameters that remember whether they are exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Real {
    Rational {
        #[serde(with = "crate::rational::wire")]
        value: Q,
    },
    /// `(p + sqrt(d)) / q` with `q > 0`.
    Quadratic { p: i64, d: u64, q: i64 },
    Float { value: f64 },
}

impl Real {
    pub fn rational(value: Q) -> Self {
        Real::Rational { value }
    }

    pub fn quadratic(p: i64, d: u64, q: i64) -> Result<Self> {
        if q <= 0 {
            return Err(Error::invalid("quadratic irrational needs a positive denominator"));
        }
        let r = Real::Quadratic { p, d, q };
        let v = r.to_f64();
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("quadratic irrational {v} outside [0,1]")));
        }
        Ok(r)
    }

    /// sqrt(2) - 1, continued fraction [0; 2, 2, 2, ...].
    pub fn silver() -> Self {
        Real::Quadratic { p: -1, d: 2, q: 1 }
    }

    /// (sqrt(5) - 1) / 2, continued fraction [0; 1, 1, 1, ...].
    pub fn golden() -> Self {
        Real::Quadratic { p: -1, d: 5, q: 2 }
    }

    /// Accepts `p/q`, decimals, `golden`, `silver`, `sqrt2-1`, `quad:p:d:q`, `float:x`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "golden" => return Ok(Real::golden()),
            "silver" | "sqrt2-1" | "sqrt(2)-1" => return Ok(Real::silver()),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("quad:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::invalid(format!("expected quad:p:d:q, got {t:?}")));
            }
            let p = parts[0].parse().map_err(|_| Error::invalid("bad p"))?;
            let d = parts[1].parse().map_err(|_| Error::invalid("bad d"))?;
            let q = parts[2].parse().map_err(|_| Error::invalid("bad q"))?;
            return Real::quadratic(p, d, q);
        }
        if let Some(rest) = t.strip_prefix("float:") {
            let value: f64 = rest.parse().map_err(|_| Error::invalid("bad float"))?;
            return Ok(Real::Float { value });
        }
        Ok(Real::Rational {
            value: rational::parse_rational(t)?,
        })
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Rational { value } => rational::to_f64(value),
            Real::Quadratic { p, d, q } => (*p as f64 + (*d as f64).sqrt()) / *q as f64,
            Real::Float { value } => *value,
        }
    }

    pub fn as_rational(&self) -> Option<&Q> {
        match self {
            Real::Rational { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Real::Rational { value } => value.is_zero(),
            Real::Float { value } => *value == 0.0,
            Real::Quadratic { .. } => self.to_f64() == 0.0 && self.fixed64() == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Real::Rational { value } => value == &rational::qi(1),
            Real::Float { value } => *value == 1.0,
            Real::Quadratic { .. } => false,
        }
    }

    /// floor(x * 2^64) saturated to u64, exact for rational and quadratic values.
    pub fn fixed64(&self) -> u64 {
        match self {
            Real::Rational { value } => rational::fixed64(value),
            Real::Float { value } => {
                if *value <= 0.0 {
                    0
                } else if *value >= 1.0 {
                    u64::MAX
                } else {
                    (value * 2f64.powi(64)) as u64
                }
            }
            Real::Quadratic { p, d, q } => {
                // floor((p 2^64 + sqrt(d 2^128)) / q); with s = isqrt(d 2^128) the
                // irrational part lies strictly inside (s, s+1), which cannot move the floor.
                let big_p = BigInt::from(*p) << 64usize;
                let s = (BigInt::from(*d) << 128usize).sqrt();
                let v = (big_p + s).div_floor(&BigInt::from(*q));
                if v.is_negative() {
                    0
                } else {
                    v.to_u64().unwrap_or(u64::MAX)
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Real::Rational { value } => rational::fmt_q(value),
            Real::Quadratic { p, d, q } => format!("({p}+sqrt({d}))/{q}"),
            Real::Float { value } => format!("{value}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn parses_named_constants() {
        assert_eq!(Real::parse("golden").unwrap(), Real::golden());
        assert_eq!(Real::parse("sqrt2-1").unwrap(), Real::silver());
        assert_eq!(
            Real::parse("1/3").unwrap(),
            Real::Rational { value: q(1, 3) }
        );
        assert!((Real::silver().to_f64() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_fixed_point_matches_float() {
        let x = Real::silver();
        let f = x.fixed64() as f64 / 2f64.powi(64);
        assert!((f - x.to_f64()).abs() < 1e-15);
        // sqrt(4) = 2 exactly: (−1 + 2)/4 = 1/4
        let quarter = Real::quadratic(-1, 4, 4).unwrap();
        assert_eq!(quarter.fixed64(), 1u64 << 62);
    }

    #[test]
    fn serde_tags() {
        let json = serde_json::to_string(&Real::silver()).unwrap();
        assert_eq!(json, r#"{"kind":"quadratic","p":-1,"d":2,"q":1}"#);
        let r: Real = serde_json::from_str(r#"{"kind":"rational","value":{"num":"1","den":"3"}}"#)
            .unwrap();
        assert_eq!(r.as_rational(), Some(&q(1, 3)));
    }
}
