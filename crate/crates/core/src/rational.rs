//! Exact rational helpers and the JSON wire form `{"num": "..", "den": ".."}`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // ratio of huge integers: scale both down
        let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000);
        let n = (x.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (x.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `5/8` style, integers without a denominator.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p/q`, an integer, or a decimal with optional exponent (`0.3`, `1e-3`),
/// always exactly.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse rational from {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::invalid("zero denominator"));
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Q::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Exact rational with the same value as a finite `f64`.
pub fn from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::invalid(format!("non-finite value {x}")))
}

/// floor(x * 2^64), saturating to `[0, u64::MAX]`.
pub fn fixed64(x: &Q) -> u64 {
    if !x.is_positive() {
        return 0;
    }
    let scaled: BigInt = (x.numer() << 64usize).div_floor(x.denom());
    scaled.to_u64().unwrap_or(u64::MAX)
}

/// Largest integer p >= 0 with p^den <= l^num, i.e. floor(l^(num/den)).
pub fn floor_rational_power(l: u64, exponent: &Q) -> Result<u64> {
    if exponent.is_negative() {
        return Err(Error::invalid("negative exponent"));
    }
    let num = exponent
        .numer()
        .to_u32()
        .ok_or_else(|| Error::invalid("exponent numerator too large"))?;
    let den = exponent
        .denom()
        .to_u32()
        .ok_or_else(|| Error::invalid("exponent denominator too large"))?;
    let target = num_traits::pow(BigUint::from(l), num as usize);
    let root = target.nth_root(den);
    root.to_u64().ok_or_else(|| Error::invalid("power overflows u64"))
}

#[derive(Serialize, Deserialize)]
struct Wire {
    num: String,
    den: String,
}

impl From<&Q> for Wire {
    fn from(x: &Q) -> Self {
        Wire {
            num: x.numer().to_string(),
            den: x.denom().to_string(),
        }
    }
}

impl TryFrom<Wire> for Q {
    type Error = String;
    fn try_from(w: Wire) -> std::result::Result<Self, String> {
        let n: BigInt = w.num.parse().map_err(|_| format!("bad numerator {:?}", w.num))?;
        let d: BigInt = w.den.parse().map_err(|_| format!("bad denominator {:?}", w.den))?;
        if d.sign() == Sign::NoSign {
            return Err("zero denominator".into());
        }
        Ok(Q::new(n, d))
    }
}

/// `#[serde(with = "crate::rational::wire")]`
pub mod wire {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire::from(x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let w = Wire::deserialize(d)?;
        Q::try_from(w).map_err(serde::de::Error::custom)
    }
}

pub mod wire_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let w: Vec<Wire> = xs.iter().map(Wire::from).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let ws = Vec::<Wire>::deserialize(d)?;
        ws.into_iter()
            .map(|w| Q::try_from(w).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod wire_pairs {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[(Q, Q)], s: S) -> std::result::Result<S::Ok, S::Error> {
        let w: Vec<(Wire, Wire)> = xs.iter().map(|(a, b)| (Wire::from(a), Wire::from(b))).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<(Q, Q)>, D::Error> {
        let ws = Vec::<(Wire, Wire)>::deserialize(d)?;
        ws.into_iter()
            .map(|(a, b)| {
                let a = Q::try_from(a).map_err(serde::de::Error::custom)?;
                let b = Q::try_from(b).map_err(serde::de::Error::custom)?;
                Ok((a, b))
            })
            .collect()
    }
}

/// Rationals as `"p/q"` strings, used by exported tables.
pub mod as_string {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod as_string_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = xs.iter().map(fmt_q).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_decimal_and_exponent() {
        assert_eq!(parse_rational("1/4").unwrap(), q(1, 4));
        assert_eq!(parse_rational("0.3").unwrap(), q(3, 10));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("-2.5e1").unwrap(), qi(-25));
        assert_eq!(parse_rational("7").unwrap(), qi(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn fixed_point_and_roots() {
        assert_eq!(fixed64(&q(1, 2)), 1u64 << 63);
        assert_eq!(fixed64(&qi(2)), u64::MAX);
        assert_eq!(fixed64(&q(-1, 2)), 0);
        assert_eq!(floor_rational_power(9, &q(1, 2)).unwrap(), 3);
        assert_eq!(floor_rational_power(8, &q(1, 3)).unwrap(), 2);
        assert_eq!(floor_rational_power(26, &q(1, 3)).unwrap(), 2);
        assert_eq!(floor_rational_power(27, &q(1, 3)).unwrap(), 3);
    }

    #[test]
    fn wire_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "wire")] Q);
        let json = serde_json::to_string(&W(q(-3, 7))).unwrap();
        assert_eq!(json, r#"{"num":"-3","den":"7"}"#);
        let back: W = serde_json::from_str(&json).unwrap();
        assert_eq!(back.0, q(-3, 7));
    }
}
