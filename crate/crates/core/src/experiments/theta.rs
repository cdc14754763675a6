//! Extremal index from three independent routes: closed form, exact cluster set, runs
//! estimator along simulated orbits.

use serde::{Deserialize, Serialize};

use super::{csv_bytes, on_exact_pool, plot_csv, Partial};
use crate::error::{Error, Result};
use crate::intervals::ExactEngine;
use crate::maps::{radius_from_mu_target_exact, MeasureSpec, Observable};
use crate::montecarlo::{closed_form_theta, estimate_theta, SimConfig, System, ThetaEstimate, ThetaMethod, Threshold};
use crate::precision::PrecisionMode;
use crate::processes::{moving_max_theta, Process};
use crate::rational::{fmt_q, to_f64, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub system: System,
    /// Required for maps; the periodic center sits in it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Observable>,
    pub q: u64,
    /// Target mass `μ(B)`.
    #[serde(with = "crate::rational::wire")]
    pub mu_target: Q,
    /// Observations per orbit.
    pub steps: u64,
    pub orbits: u64,
    /// Defaults to runs with the same `q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<ThetaMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<PrecisionMode>,
}

impl ThetaSpec {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::invalid("q must be at least 1"));
        }
        if !(self.mu_target > Q::from_integer(0.into()) && self.mu_target < Q::from_integer(1.into())) {
            return Err(Error::invalid("mu target must lie in (0,1)"));
        }
        if self.steps == 0 || self.orbits == 0 {
            return Err(Error::invalid("steps and orbits must be positive"));
        }
        if matches!(self.system, System::Map { .. }) && self.observable.is_none() {
            return Err(Error::invalid("a map system needs an observable"));
        }
        Ok(())
    }

    fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match &self.observable {
            Some(o) => format!("{} at {} q={}", self.system.name(), o.center.describe(), self.q),
            None => format!("{} q={}", self.system.name(), self.q),
        })
    }

    fn method(&self) -> ThetaMethod {
        self.method.unwrap_or(ThetaMethod::Runs { q: self.q })
    }

    fn closed_form(&self) -> Result<Option<ThetaEstimate>> {
        match (&self.system, &self.observable) {
            (System::Map { map, .. }, Some(o)) => closed_form_theta(map, &o.center, self.q).map(Some),
            (System::Process { process: Process::MovingMax { a } }, _) => {
                Ok(Some(ThetaEstimate::closed(moving_max_theta(*a)?)))
            }
            (System::Process { process: Process::ParetoIid }, _) => Ok(Some(ThetaEstimate::closed(1.0))),
            _ => Ok(None),
        }
    }

    /// `μ(A^(q))/μ(B)` for the ball of exact mass `mu_target`, when the engine applies.
    fn exact(&self) -> Result<Option<ThetaEstimate>> {
        let (System::Map { map, measure }, Some(obs)) = (&self.system, &self.observable) else {
            return Ok(None);
        };
        if map.affine_branches().is_none() {
            return Ok(None);
        }
        let model = measure.clone().unwrap_or_else(|| MeasureSpec::natural_for(map)).resolve(map)?;
        let r = match radius_from_mu_target_exact(&model, obs, &self.mu_target) {
            Ok(r) => r,
            Err(Error::Unsupported(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let ball = obs.ball(&r)?;
        let engine = ExactEngine::new(map, &model)?;
        let (_, theta) = on_exact_pool(|| engine.exact_aq_theta(&ball, self.q))??;
        Ok(Some(ThetaEstimate::exact(&theta, ThetaMethod::ExactAq { q: self.q })))
    }

    fn estimate(&self, seed: u64) -> Result<ThetaEstimate> {
        let mut cfg = SimConfig::new(
            self.system.clone(),
            self.observable.clone(),
            Threshold::Mass {
                mass: to_f64(&self.mu_target),
            },
        );
        cfg.n_max = self.steps;
        cfg.orbits = self.orbits;
        cfg.seed = seed;
        cfg.precision = self.precision;
        estimate_theta(&cfg, self.method())
    }
}

struct Row {
    label: String,
    closed: Option<ThetaEstimate>,
    exact: Option<ThetaEstimate>,
    est: ThetaEstimate,
}

fn opt_val(t: &Option<ThetaEstimate>) -> String {
    t.as_ref().map(|t| t.value.to_string()).unwrap_or_default()
}

/// `(|a − b|, |a − b| / se)` with both standard errors combined in quadrature.
fn discrepancy(a: &Option<ThetaEstimate>, b: &Option<ThetaEstimate>) -> Option<(f64, f64)> {
    let (a, b) = (a.as_ref()?, b.as_ref()?);
    let d = (a.value - b.value).abs();
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    Some((d, if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY }))
}

pub(crate) fn run_theta_suite(entries: &[ThetaSpec], seed: u64) -> Result<Partial> {
    let mut rows = Vec::new();
    for e in entries {
        rows.push(Row {
            label: e.label(),
            closed: e.closed_form()?,
            exact: e.exact()?,
            est: e.estimate(seed)?,
        });
    }
    let mut p = Partial::new(serde_json::Value::Null);
    let mut csv_rows = Vec::new();
    let mut summary = Vec::new();
    let mut pts = Vec::new();
    for (i, (r, spec)) in rows.iter().zip(entries).enumerate() {
        let est = Some(r.est.clone());
        let pairs = [
            ("closed_vs_exact", discrepancy(&r.closed, &r.exact)),
            ("closed_vs_estimate", discrepancy(&r.closed, &est)),
            ("exact_vs_estimate", discrepancy(&r.exact, &est)),
        ];
        let exact_str = r.exact.as_ref().and_then(|t| t.exact.clone()).unwrap_or_default();
        p.lines.push(format!(
            "{}: closed form {}, exact {}, estimate {:.6} ± {:.6} ({} exceedances{})",
            r.label,
            r.closed.as_ref().map(|t| t.value.to_string()).unwrap_or_else(|| "-".into()),
            if exact_str.is_empty() { "-".to_string() } else { exact_str.clone() },
            r.est.value,
            r.est.stderr,
            r.est.exceedances.unwrap_or(0),
            r.est.flag.as_ref().map(|f| format!("; {f}")).unwrap_or_default(),
        ));
        let mut row = vec![
            r.label.clone(),
            spec.q.to_string(),
            fmt_q(&spec.mu_target),
            opt_val(&r.closed),
            exact_str.clone(),
            opt_val(&r.exact),
            r.est.value.to_string(),
            r.est.stderr.to_string(),
            r.est.exceedances.unwrap_or(0).to_string(),
        ];
        for (_, d) in &pairs {
            row.push(d.map(|d| d.1.to_string()).unwrap_or_default());
        }
        csv_rows.push(row);
        summary.push(serde_json::json!({
            "label": r.label,
            "q": spec.q,
            "mu_target": fmt_q(&spec.mu_target),
            "closed_form": r.closed,
            "exact": r.exact,
            "estimate": r.est,
            "discrepancy_z": pairs.iter().map(|(k, d)| (k.to_string(), serde_json::json!(d.map(|d| d.1)))).collect::<serde_json::Map<_, _>>(),
        }));
        pts.push((i as f64, r.est.value, r.est.stderr));
    }
    p.summary = serde_json::Value::Array(summary);
    p.files.insert(
        "theta.csv".into(),
        csv_bytes(
            &[
                "label",
                "q",
                "mu_target",
                "closed_form",
                "exact",
                "exact_decimal",
                "estimate",
                "stderr",
                "exceedances",
                "z_closed_exact",
                "z_closed_estimate",
                "z_exact_estimate",
            ],
            &csv_rows,
        )?,
    );
    p.files.insert("plot_theta.csv".into(), plot_csv(&pts)?);
    Ok(p)
}
