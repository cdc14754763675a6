//! Tail-mass families `μ_n = μ(X_1 > u_n)` and their radii.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{radius_from_mu_target, MeasureModel, Observable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum FamilyForm {
    /// `c log log n / n`
    CLogLogOverN { c: f64 },
    /// `n^{-σ}`
    PowerLaw { sigma: f64 },
    /// `(log n)^β / n`
    LogPowerOverN { beta: f64 },
    /// `(log log n + c log log log n) / n`
    RsBoundary { c: f64 },
    /// `values[i] = μ_{i+1}`
    ExplicitTable { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFamily {
    pub form: FamilyForm,
    /// First index of the series.
    pub n0: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    pub first_violation: Option<u64>,
}

pub const DEFAULT_N0: u64 = 16;

impl ThresholdFamily {
    pub fn new(form: FamilyForm) -> Result<Self> {
        let n0 = match form {
            FamilyForm::ExplicitTable { .. } => 1,
            _ => DEFAULT_N0,
        };
        Self::with_n0(form, n0)
    }

    pub fn with_n0(form: FamilyForm, n0: u64) -> Result<Self> {
        match &form {
            FamilyForm::CLogLogOverN { c } if !(*c > 0.0) => {
                return Err(Error::invalid("c must be positive"))
            }
            FamilyForm::PowerLaw { sigma } if !(*sigma > 0.0 && *sigma < 1.0) => {
                return Err(Error::invalid("sigma must lie in (0,1)"))
            }
            FamilyForm::LogPowerOverN { beta } if !beta.is_finite() => {
                return Err(Error::invalid("beta must be finite"))
            }
            FamilyForm::RsBoundary { c } if !c.is_finite() => {
                return Err(Error::invalid("c must be finite"))
            }
            FamilyForm::ExplicitTable { values } => {
                if values.is_empty() {
                    return Err(Error::invalid("empty table"));
                }
                if values.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                    return Err(Error::invalid("table values must lie in (0,1)"));
                }
            }
            _ => {}
        }
        if n0 == 0 {
            return Err(Error::invalid("n0 must be at least 1"));
        }
        let fam = ThresholdFamily { form, n0 };
        if !matches!(fam.form, FamilyForm::ExplicitTable { .. }) {
            let m = fam.mu(n0).unwrap_or(f64::NAN);
            if !(m > 0.0 && m < 1.0) {
                return Err(Error::invalid(format!("mu at n0 = {n0} is {m}, outside (0,1)")));
            }
        }
        Ok(fam)
    }

    pub fn cloglog(c: f64) -> Result<Self> {
        Self::new(FamilyForm::CLogLogOverN { c })
    }

    /// `cloglog:1.5`, `power:0.9`, `logpow:-2`, `rsb:2.5`, `table:0.5,0.2`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("expected form:parameter, got {s:?}")))?;
        let num = |a: &str| -> Result<f64> {
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number {a:?}")))
        };
        let form = match name {
            "cloglog" => FamilyForm::CLogLogOverN { c: num(arg)? },
            "power" => FamilyForm::PowerLaw { sigma: num(arg)? },
            "logpow" => FamilyForm::LogPowerOverN { beta: num(arg)? },
            "rsb" | "rs-boundary" => FamilyForm::RsBoundary { c: num(arg)? },
            "table" => FamilyForm::ExplicitTable {
                values: arg.split(',').map(num).collect::<Result<_>>()?,
            },
            _ => return Err(Error::invalid(format!("unknown family {name:?}"))),
        };
        Self::new(form)
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.form, FamilyForm::ExplicitTable { .. })
    }

    /// Last index with a value, for tables.
    pub fn table_len(&self) -> Option<u64> {
        match &self.form {
            FamilyForm::ExplicitTable { values } => Some(values.len() as u64),
            _ => None,
        }
    }

    /// `log μ_n` as a function of `log n`; closed forms only.
    pub fn ln_mu_at_ln_n(&self, ln_n: f64) -> Option<f64> {
        let l2 = ln_n.ln();
        match self.form {
            FamilyForm::CLogLogOverN { c } => Some(c.ln() + l2.ln() - ln_n),
            FamilyForm::PowerLaw { sigma } => Some(-sigma * ln_n),
            FamilyForm::LogPowerOverN { beta } => Some(beta * l2 - ln_n),
            FamilyForm::RsBoundary { c } => Some((l2 + c * l2.ln()).ln() - ln_n),
            FamilyForm::ExplicitTable { .. } => None,
        }
    }

    pub fn mu(&self, n: u64) -> Option<f64> {
        match &self.form {
            FamilyForm::ExplicitTable { values } => {
                if n == 0 {
                    None
                } else {
                    values.get(n as usize - 1).copied()
                }
            }
            _ => self.ln_mu_at_ln_n((n as f64).ln()).map(f64::exp),
        }
    }

    /// `n ↦ n μ_n` non-decreasing on `[n0, n_probe_max]`.
    pub fn monotone_check(&self, n_probe_max: u64) -> MonotoneReport {
        let ok = MonotoneReport {
            monotone: true,
            first_violation: None,
        };
        let scan = |hi: u64| -> MonotoneReport {
            let mut prev: Option<f64> = None;
            for n in self.n0..=hi {
                let Some(m) = self.mu(n) else { break };
                let v = n as f64 * m;
                if let Some(p) = prev {
                    if v < p {
                        return MonotoneReport {
                            monotone: false,
                            first_violation: Some(n),
                        };
                    }
                }
                prev = Some(v);
            }
            ok
        };
        match self.form {
            FamilyForm::CLogLogOverN { .. } | FamilyForm::PowerLaw { .. } => ok,
            FamilyForm::LogPowerOverN { beta } => {
                if beta >= 0.0 {
                    ok
                } else {
                    MonotoneReport {
                        monotone: false,
                        first_violation: Some(self.n0 + 1),
                    }
                }
            }
            FamilyForm::RsBoundary { c } => {
                // d/dn (log log n + c log log log n) has the sign of 1 + c / log log n
                if c >= -((self.n0 as f64).ln().ln()) {
                    ok
                } else {
                    scan(n_probe_max)
                }
            }
            FamilyForm::ExplicitTable { .. } => scan(n_probe_max),
        }
    }

    /// Radius sequence `r_n` solving `μ(ball(x̃, r_n)) = μ_n`.
    pub fn radius(&self, n: u64, measure: &MeasureModel, obs: &Observable) -> Result<f64> {
        let m = self
            .mu(n)
            .ok_or_else(|| Error::invalid(format!("family undefined at n = {n}")))?;
        radius_from_mu_target(measure, obs, m)
    }

    pub fn describe(&self) -> String {
        match &self.form {
            FamilyForm::CLogLogOverN { c } => format!("cloglog:{c}"),
            FamilyForm::PowerLaw { sigma } => format!("power:{sigma}"),
            FamilyForm::LogPowerOverN { beta } => format!("logpow:{beta}"),
            FamilyForm::RsBoundary { c } => format!("rsb:{c}"),
            FamilyForm::ExplicitTable { values } => format!("table[{}]", values.len()),
        }
    }
}
