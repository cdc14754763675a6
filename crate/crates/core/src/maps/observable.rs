//! Observables `φ(x) = ψ(dist(x, x̃))` and their super-level balls.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::IntervalSet;
use crate::rational::Q;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Psi {
    /// `ψ(y) = -log y`
    NegLog,
    /// `ψ(y) = y^{-κ}`
    PowerLaw { kappa: f64 },
    /// `φ(x) = ⌊1/x⌋`, one-sided at zero
    FloorReciprocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallSide {
    TwoSided,
    LeftOnly,
    RightOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub center: Real,
    pub psi: Psi,
    pub side: BallSide,
}

impl Psi {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "neglog" | "log" => Ok(Psi::NegLog),
            "floor" | "floor-reciprocal" => Ok(Psi::FloorReciprocal),
            _ => {
                let k: f64 = s
                    .strip_prefix("power:")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown psi {s:?}")))?;
                Ok(Psi::PowerLaw { kappa: k })
            }
        }
    }
}

impl Observable {
    /// Validates and normalizes: balls at the endpoints 0 and 1 become one-sided,
    /// and the floor-reciprocal observable is pinned to the right side of 0.
    pub fn new(center: Real, psi: Psi, side: BallSide) -> Result<Self> {
        let c = center.to_f64();
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::invalid(format!("center {c} outside [0,1]")));
        }
        if let Psi::PowerLaw { kappa } = psi {
            if !(kappa > 0.0) {
                return Err(Error::invalid("power-law exponent must be positive"));
            }
        }
        let side = match psi {
            Psi::FloorReciprocal => {
                if !center.is_zero() {
                    return Err(Error::invalid("floor-reciprocal observable needs center 0"));
                }
                BallSide::RightOnly
            }
            _ if center.is_zero() => BallSide::RightOnly,
            _ if center.is_one() => BallSide::LeftOnly,
            _ => side,
        };
        Ok(Observable { center, psi, side })
    }

    pub fn neglog(center: Real) -> Result<Self> {
        Observable::new(center, Psi::NegLog, BallSide::TwoSided)
    }

    pub fn psi(&self, y: f64) -> f64 {
        match self.psi {
            Psi::NegLog => -y.ln(),
            Psi::PowerLaw { kappa } => y.powf(-kappa),
            Psi::FloorReciprocal => (1.0 / y).floor(),
        }
    }

    /// Radius `r` with `{φ ≥ u} = ball(x̃, r)`.
    pub fn radius_for_level(&self, u: f64) -> f64 {
        if u == f64::INFINITY {
            return 0.0;
        }
        match self.psi {
            Psi::NegLog => (-u).exp(),
            Psi::PowerLaw { kappa } => {
                if u <= 0.0 {
                    f64::INFINITY
                } else {
                    u.powf(-1.0 / kappa)
                }
            }
            Psi::FloorReciprocal => {
                let k = u.ceil();
                if k <= 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / k
                }
            }
        }
    }

    /// Level `u` whose super-level set is the ball of radius `r`.
    pub fn level_for_radius(&self, r: f64) -> f64 {
        self.psi(r)
    }

    /// Distance to the center, infinite on the excluded side of a one-sided ball.
    pub fn dist(&self, x: f64) -> f64 {
        let c = self.center.to_f64();
        match self.side {
            BallSide::TwoSided => (x - c).abs(),
            BallSide::RightOnly => {
                if x >= c {
                    x - c
                } else {
                    f64::INFINITY
                }
            }
            BallSide::LeftOnly => {
                if x <= c {
                    c - x
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.psi(self.dist(x))
    }

    /// Float endpoints `[lo, hi)` of the ball, clipped to `[0, 1]`.
    pub fn ball_f64(&self, r: f64) -> (f64, f64) {
        let c = self.center.to_f64();
        let (lo, hi) = match self.side {
            BallSide::TwoSided => (c - r, c + r),
            BallSide::RightOnly => (c, c + r),
            BallSide::LeftOnly => (c - r, c),
        };
        (lo.max(0.0), hi.min(1.0))
    }

    /// Exact ball for a rational center, as a half-open interval clipped to `[0, 1]`.
    pub fn ball(&self, r: &Q) -> Result<IntervalSet> {
        let c = self
            .center
            .as_rational()
            .ok_or_else(|| Error::Unsupported("exact balls need a rational center".into()))?;
        if r.is_zero() {
            return Ok(IntervalSet::empty());
        }
        let (lo, hi) = match self.side {
            BallSide::TwoSided => (c - r, c + r),
            BallSide::RightOnly => (c.clone(), c + r),
            BallSide::LeftOnly => (c - r, c.clone()),
        };
        Ok(IntervalSet::interval(lo.max(Q::zero()), hi.min(Q::one())))
    }
}
