//! Arithmetic regimes for orbit evaluation.
//!
//! `Float64` is fast and loses the true orbit after a few dozen expanding steps.
//! `BigFloat(bits)` carries a fixed-point mantissa with `bits` fractional bits.
//! `ExactSymbolic` means rational arithmetic for single evaluations and digit
//! streams for long orbits.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::rational::{self, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PrecisionMode {
    Float64,
    BigFloat { bits: u32 },
    ExactSymbolic,
}

impl PrecisionMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "float64" | "f64" => Some(PrecisionMode::Float64),
            "exact" | "exact-symbolic" | "symbolic" => Some(PrecisionMode::ExactSymbolic),
            _ => {
                let bits = s.strip_prefix("bigfloat:")?.parse().ok()?;
                Some(PrecisionMode::BigFloat { bits })
            }
        }
    }
}

/// Fixed-point number `value / 2^bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFixed {
    pub value: BigInt,
    pub bits: u32,
}

impl BigFixed {
    /// Rounds toward minus infinity.
    pub fn from_q(x: &Q, bits: u32) -> Self {
        let scaled = (x.numer() << bits as usize).div_floor(x.denom());
        BigFixed { value: scaled, bits }
    }

    pub fn from_f64(x: f64, bits: u32) -> Self {
        let q = rational::from_f64(x).unwrap_or_default();
        BigFixed::from_q(&q, bits)
    }

    pub fn to_q(&self) -> Q {
        Q::new(self.value.clone(), BigInt::from(1) << self.bits as usize)
    }

    pub fn to_f64(&self) -> f64 {
        let shift = (self.bits as i64 - 60).max(0) as usize;
        let top = (&self.value >> shift).to_f64().unwrap_or(f64::NAN);
        top * 2f64.powi(shift as i32 - self.bits as i32)
    }
}

/// A point in one of the three arithmetic regimes.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Exact(Q),
    Float(f64),
    Big(BigFixed),
}

impl Point {
    pub fn to_f64(&self) -> f64 {
        match self {
            Point::Exact(q) => rational::to_f64(q),
            Point::Float(x) => *x,
            Point::Big(b) => b.to_f64(),
        }
    }

    pub fn mode(&self) -> PrecisionMode {
        match self {
            Point::Exact(_) => PrecisionMode::ExactSymbolic,
            Point::Float(_) => PrecisionMode::Float64,
            Point::Big(b) => PrecisionMode::BigFloat { bits: b.bits },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn big_fixed_round_trip() {
        let b = BigFixed::from_q(&q(1, 3), 100);
        assert!((b.to_f64() - 1.0 / 3.0).abs() < 1e-16);
        let c = BigFixed::from_q(&q(3, 8), 10);
        assert_eq!(c.to_q(), q(3, 8));
    }

    #[test]
    fn parses_modes() {
        assert_eq!(PrecisionMode::parse("f64"), Some(PrecisionMode::Float64));
        assert_eq!(
            PrecisionMode::parse("bigfloat:256"),
            Some(PrecisionMode::BigFloat { bits: 256 })
        );
        assert_eq!(PrecisionMode::parse("nope"), None);
    }
}
