//! Series verdicts for `Σ μ_n e^{-nθμ_n}` and `Σ μ_n`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::family::{FamilyForm, ThresholdFamily};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    SymbolicRule,
    Condensation,
    PartialSum,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// `(index, partial sum)` at a geometric grid of indices.
    pub partial_sums: Vec<(u64, f64)>,
    /// Fitted exponent of the index in the tail terms.
    pub fitted_exponent: Option<f64>,
    /// Fitted exponent of the log of the index.
    pub fitted_log_exponent: Option<f64>,
    pub fit_rms: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub classification: Classification,
    pub method: Method,
    pub evidence: Evidence,
}

impl fmt::Display for SeriesVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ({:?})", self.classification, self.method)
    }
}

/// Half-width of the band around slope −1 that maps to Inconclusive.
pub const DEAD_ZONE: f64 = 0.05;
/// Fitted slopes this close to −1 are treated as exactly −1 and settled by the log exponent.
pub const EXACT_SLOPE_TOL: f64 = 1e-6;
/// Largest fall of the fitted slope between the last two decades accepted for a divergent verdict.
pub const DRIFT_TOL: f64 = 0.01;
pub const DEFAULT_K_MAX: u64 = 10_000;
pub const MIN_TABLE_LEN: u64 = 1000;

/// Tail fit of `log T ≈ α + β log x + γ log log x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFit {
    pub beta: f64,
    pub gamma: f64,
    /// Root-mean-square residual of the fit.
    pub rms: f64,
}

/// Least squares with regressors `log x` and `log log x`; requires `x > e`.
pub fn fit_tail(xs: &[f64], ln_terms: &[f64]) -> Option<TailFit> {
    let pts: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(ln_terms)
        .filter(|(x, y)| **x > std::f64::consts::E && y.is_finite())
        .map(|(x, y)| (x.ln(), x.ln().ln(), *y))
        .collect();
    if pts.len() < 20 {
        return None;
    }
    let n = pts.len() as f64;
    let (m1, m2, my) = pts.iter().fold((0.0, 0.0, 0.0), |a, p| {
        (a.0 + p.0 / n, a.1 + p.1 / n, a.2 + p.2 / n)
    });
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, v, y) in &pts {
        let (u, v, y) = (u - m1, v - m2, y - my);
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        s1y += u * y;
        s2y += v * y;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det.abs() > 0.0) {
        return None;
    }
    let beta = (s22 * s1y - s12 * s2y) / det;
    let gamma = (s11 * s2y - s12 * s1y) / det;
    let sse: f64 = pts
        .iter()
        .map(|&(u, v, y)| {
            let r = (y - my) - beta * (u - m1) - gamma * (v - m2);
            r * r
        })
        .sum();
    Some(TailFit {
        beta,
        gamma,
        rms: (sse / n).sqrt(),
    })
}

/// Decide `Σ x^β (log x)^γ` from a fit.
pub fn decide(fit: TailFit) -> Classification {
    let d = fit.beta + 1.0;
    if d.abs() <= EXACT_SLOPE_TOL {
        let g = fit.gamma + 1.0;
        if g < -DEAD_ZONE {
            Classification::Converges
        } else if g > DEAD_ZONE {
            Classification::Diverges
        } else {
            Classification::Inconclusive
        }
    } else if d < -DEAD_ZONE {
        Classification::Converges
    } else if d > DEAD_ZONE {
        Classification::Diverges
    } else {
        Classification::Inconclusive
    }
}

/// Classify `Σ_i T_i` from log terms indexed by `xs` (increasing), fitting over the last two decades.
pub fn classify_log_terms(xs: &[f64], ln_terms: &[f64]) -> (Classification, Evidence) {
    let mut ev = Evidence {
        partial_sums: geometric_partial_sums(xs, ln_terms),
        ..Default::default()
    };
    let Some(&x_max) = xs.last() else {
        ev.note = "no terms".into();
        return (Classification::Inconclusive, ev);
    };
    let lo = xs.partition_point(|&x| x < x_max / 100.0);
    let (wx, wy) = (&xs[lo..], &ln_terms[lo..]);
    if wy.iter().any(|y| *y == f64::NEG_INFINITY) {
        ev.note = "terms underflow in the tail".into();
        return (Classification::Converges, ev);
    }
    let mid = wx.partition_point(|&x| x < x_max / 2.0);
    if mid < wy.len() {
        let drop = wy[mid] - wy[wy.len() - 1];
        // a power law loses |β| log 2 over the last halving of the index
        if drop > 100.0 * std::f64::consts::LN_2 {
            ev.note = "super-polynomial decay".into();
            return (Classification::Converges, ev);
        }
    }
    let split = wx.partition_point(|&x| x < x_max / 10.0);
    let halves = (fit_tail(&wx[..split], &wy[..split]), fit_tail(&wx[split..], &wy[split..]));
    match fit_tail(wx, wy) {
        Some(fit) => {
            ev.fitted_exponent = Some(fit.beta);
            ev.fitted_log_exponent = Some(fit.gamma);
            ev.fit_rms = Some(fit.rms);
            let c = decide(fit);
            // a falling slope can still cross −1 further out; a rising one can cross it from below
            let stable = match (c, halves) {
                (Classification::Diverges, (Some(early), Some(late))) => {
                    decide(late) == c && late.beta >= early.beta - DRIFT_TOL
                }
                (Classification::Converges, (_, Some(late))) => decide(late) == c,
                (Classification::Inconclusive, _) => true,
                _ => false,
            };
            if !stable && c != Classification::Inconclusive {
                ev.note = "fitted exponent drifts toward the boundary".into();
                return (Classification::Inconclusive, ev);
            }
            ev.note = match c {
                Classification::Inconclusive => "fitted exponent inside the dead zone".into(),
                _ => "fitted tail exponent".into(),
            };
            (c, ev)
        }
        None => {
            ev.note = "too few tail points to fit".into();
            (Classification::Inconclusive, ev)
        }
    }
}

fn geometric_partial_sums(xs: &[f64], ln_terms: &[f64]) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut s = 0.0;
    let mut next = 1usize;
    for (i, (x, y)) in xs.iter().zip(ln_terms).enumerate() {
        s += y.exp();
        if i + 1 == next || i + 1 == xs.len() {
            out.push((*x as u64, s));
            next *= 2;
        }
    }
    out
}

fn symbolic(c: Classification, rule: &str) -> SeriesVerdict {
    SeriesVerdict {
        classification: c,
        method: Method::SymbolicRule,
        evidence: Evidence {
            note: rule.into(),
            ..Default::default()
        },
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("theta must lie in (0,1], got {theta}")))
    }
}

/// Verdict on `Σ_n μ_n e^{-nθμ_n}`.
pub fn rs_classify(family: &ThresholdFamily, theta: f64) -> Result<SeriesVerdict> {
    use Classification::*;
    check_theta(theta)?;
    Ok(match family.form {
        FamilyForm::CLogLogOverN { c } => {
            if c * theta > 1.0 {
                symbolic(Converges, "term ~ c loglog n (log n)^(-cθ) / n, cθ > 1")
            } else {
                symbolic(Diverges, "term ~ c loglog n (log n)^(-cθ) / n, cθ <= 1")
            }
        }
        FamilyForm::PowerLaw { .. } => symbolic(Converges, "stretched-exponential decay"),
        FamilyForm::LogPowerOverN { beta } => {
            if beta > 0.0 {
                symbolic(Converges, "exp(-θ (log n)^β) with β > 0")
            } else if beta >= -1.0 {
                symbolic(Diverges, "term ~ (log n)^β / n with -1 <= β <= 0")
            } else {
                symbolic(Converges, "term ~ (log n)^β / n with β < -1")
            }
        }
        FamilyForm::RsBoundary { c } => {
            if theta < 1.0 {
                symbolic(Diverges, "term ~ (log n)^(-θ) / n up to log log factors, θ < 1")
            } else if c > 2.0 {
                symbolic(Converges, "θ = 1: term ~ (loglog n)^(1-c) / (n log n), c > 2")
            } else {
                symbolic(Diverges, "θ = 1: term ~ (loglog n)^(1-c) / (n log n), c <= 2")
            }
        }
        FamilyForm::ExplicitTable { .. } => partial_sum_classify(family, |n, m| {
            m.ln() - n as f64 * theta * m
        })?,
    })
}

/// Verdict on `Σ_n μ_n`.
pub fn sum_mu_classify(family: &ThresholdFamily) -> Result<SeriesVerdict> {
    use Classification::*;
    Ok(match family.form {
        FamilyForm::CLogLogOverN { .. } => symbolic(Diverges, "c loglog n / n"),
        FamilyForm::PowerLaw { .. } => symbolic(Diverges, "n^(-σ) with σ < 1"),
        FamilyForm::LogPowerOverN { beta } => {
            if beta >= -1.0 {
                symbolic(Diverges, "(log n)^β / n with β >= -1")
            } else {
                symbolic(Converges, "(log n)^β / n with β < -1")
            }
        }
        FamilyForm::RsBoundary { .. } => symbolic(Diverges, "dominates loglog n / n"),
        FamilyForm::ExplicitTable { .. } => partial_sum_classify(family, |_, m| m.ln())?,
    })
}

fn partial_sum_classify(
    family: &ThresholdFamily,
    ln_term: impl Fn(u64, f64) -> f64,
) -> Result<SeriesVerdict> {
    let len = family.table_len().unwrap_or(0);
    let need = MIN_TABLE_LEN.max(100 * family.n0.max(10));
    if len < need {
        return Err(Error::invalid(format!(
            "table of length {len} is too short for a partial-sum verdict (need {need})"
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (family.n0..=len)
        .map(|n| (n as f64, ln_term(n, family.mu(n).unwrap())))
        .unzip();
    let (c, evidence) = classify_log_terms(&xs, &ys);
    Ok(SeriesVerdict {
        classification: c,
        method: Method::PartialSum,
        evidence,
    })
}

/// `log ⌊a^k⌋`, falling back to `k log a` beyond exact integer range.
fn ln_floor_pow(a: f64, k: u64) -> f64 {
    let v = a.powf(k as f64);
    if v < 9.0e15 {
        v.floor().ln()
    } else {
        k as f64 * a.ln()
    }
}

fn ln_mu_for(family: &ThresholdFamily, a: f64, k: u64) -> Option<f64> {
    if family.is_closed_form() {
        family.ln_mu_at_ln_n(ln_floor_pow(a, k))
    } else {
        let v = a.powf(k as f64);
        if v >= 9.0e15 {
            return None;
        }
        family.mu(v.floor() as u64).map(f64::ln)
    }
}

fn first_k(family: &ThresholdFamily, a: f64) -> u64 {
    let mut k = 1;
    while a.powf(k as f64).floor() < family.n0 as f64 {
        k += 1;
    }
    k
}

fn check_condensation(family: &ThresholdFamily, theta: f64, a: f64) -> Result<()> {
    if !(theta > 0.0) {
        return Err(Error::invalid("theta must be positive"));
    }
    if !(a > 1.0 && a.is_finite()) {
        return Err(Error::invalid("condensation base must exceed 1"));
    }
    let rep = family.monotone_check(1_000_000);
    if !rep.monotone {
        return Err(Error::NotMonotone {
            n: rep.first_violation.unwrap_or(family.n0),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondensationTerms {
    pub a: f64,
    pub k: Vec<u64>,
    /// `e^{-θ⌊a^k⌋ μ_{⌊a^{k+1}⌋}}`
    pub upper: Vec<f64>,
    /// `e^{-θ⌊a^k⌋ μ_{⌊a^k⌋}}`
    pub lower: Vec<f64>,
    pub upper_partial: Vec<f64>,
    pub lower_partial: Vec<f64>,
    #[serde(skip)]
    ln_upper: Vec<f64>,
    #[serde(skip)]
    ln_lower: Vec<f64>,
}

impl CondensationTerms {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    fn xs(&self) -> Vec<f64> {
        self.k.iter().map(|k| *k as f64 * self.a.ln()).collect()
    }

    /// Numeric verdict on the sum of the `upper` sequence.
    pub fn classify_upper(&self) -> (Classification, Evidence) {
        classify_log_terms(&self.xs(), &self.ln_upper)
    }

    pub fn classify_lower(&self) -> (Classification, Evidence) {
        classify_log_terms(&self.xs(), &self.ln_lower)
    }
}

/// Both condensed sequences for `k` from the first `⌊a^k⌋ ≥ n0` up to `k_max`.
pub fn condensation_terms(
    family: &ThresholdFamily,
    theta: f64,
    a: f64,
    k_max: u64,
) -> Result<CondensationTerms> {
    check_condensation(family, theta, a)?;
    let mut out = CondensationTerms {
        a,
        k: Vec::new(),
        upper: Vec::new(),
        lower: Vec::new(),
        upper_partial: Vec::new(),
        lower_partial: Vec::new(),
        ln_upper: Vec::new(),
        ln_lower: Vec::new(),
    };
    let (mut su, mut sl) = (0.0, 0.0);
    for k in first_k(family, a)..=k_max {
        let (Some(m_next), Some(m_here)) = (ln_mu_for(family, a, k + 1), ln_mu_for(family, a, k))
        else {
            break;
        };
        let ln_nk = ln_floor_pow(a, k);
        let lu = -theta * (ln_nk + m_next).exp();
        let ll = -theta * (ln_nk + m_here).exp();
        su += lu.exp();
        sl += ll.exp();
        out.k.push(k);
        out.ln_upper.push(lu);
        out.ln_lower.push(ll);
        out.upper.push(lu.exp());
        out.lower.push(ll.exp());
        out.upper_partial.push(su);
        out.lower_partial.push(sl);
    }
    Ok(out)
}

/// Verdict on `Σ_n μ_n e^{-nθμ_n}` through `Σ_k a^k c_{⌊a^k⌋}`.
pub fn rs_classify_condensation(
    family: &ThresholdFamily,
    theta: f64,
    a: f64,
    k_max: u64,
) -> Result<SeriesVerdict> {
    check_theta(theta)?;
    check_condensation(family, theta, a)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in first_k(family, a)..=k_max {
        let Some(lm) = ln_mu_for(family, a, k) else { break };
        let ln_nk = ln_floor_pow(a, k);
        xs.push(k as f64 * a.ln());
        ys.push(k as f64 * a.ln() + lm - theta * (ln_nk + lm).exp());
    }
    let (c, evidence) = classify_log_terms(&xs, &ys);
    Ok(SeriesVerdict {
        classification: c,
        method: Method::Condensation,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Classification::*;

    fn fam(s: &str) -> ThresholdFamily {
        ThresholdFamily::parse(s).unwrap()
    }

    #[test]
    fn symbolic_examples() {
        assert_eq!(rs_classify(&fam("cloglog:1.5"), 1.0).unwrap().classification, Converges);
        assert_eq!(rs_classify(&fam("cloglog:0.5"), 1.0).unwrap().classification, Diverges);
        assert_eq!(rs_classify(&fam("cloglog:1.5"), 0.5).unwrap().classification, Diverges);
        assert_eq!(sum_mu_classify(&fam("power:0.9")).unwrap().classification, Diverges);
        assert!(rs_classify(&fam("cloglog:1"), 0.0).is_err());
    }

    #[test]
    fn table_partial_sums() {
        let values: Vec<f64> = (1..=10_000).map(|n| 0.5 / (n as f64).powi(2)).collect();
        let f = ThresholdFamily::new(FamilyForm::ExplicitTable { values }).unwrap();
        let v = sum_mu_classify(&f).unwrap();
        assert_eq!(v.classification, Converges);
        assert_eq!(v.method, Method::PartialSum);
        let short = fam("table:0.5,0.2");
        assert!(sum_mu_classify(&short).is_err());
    }

    #[test]
    fn condensation_matches_cloglog_boundary() {
        for (c, theta, want) in [(1.5, 1.0, Converges), (1.0, 1.0, Diverges), (0.9, 1.0, Diverges), (2.0, 0.5, Diverges)] {
            let v = rs_classify_condensation(&fam(&format!("cloglog:{c}")), theta, 2.0, DEFAULT_K_MAX).unwrap();
            assert_eq!(v.classification, want, "c={c} θ={theta} {:?}", v.evidence);
        }
    }

    #[test]
    fn condensation_terms_shape() {
        let t = condensation_terms(&fam("cloglog:2"), 0.5, 2.0, 0).unwrap();
        assert!(t.is_empty());
        let t = condensation_terms(&fam("cloglog:2"), 0.5, 2.0, 200).unwrap();
        // (k log 2)^(-cθ) up to the floor
        let i = t.k.iter().position(|k| *k == 100).unwrap();
        let expect = (100.0 * 2f64.ln()).powf(-1.0);
        assert!((t.lower[i] / expect - 1.0).abs() < 1e-9);
        assert!(condensation_terms(&fam("table:0.5,0.2"), 1.0, 2.0, 5).is_err());
    }
}
