//! Orbit-simulation experiments and the series classifier.

use serde::{Deserialize, Serialize};

use super::{csv_bytes, json_bytes, plot_csv, ClassifySpec, Partial};
use crate::criteria::{rs_classify, rs_classify_condensation, sum_mu_classify, ThresholdFamily};
use crate::error::{Error, Result};
use crate::maps::Observable;
use crate::montecarlo::{
    eah_from_records, estimate_theta_zero_scaling, philipp_fixed, philipp_statistic, philipp_summary,
    simulate_max_process, simulate_sweep, write_records_bin, write_records_csv, EstimateWithCI,
    PhilippRow, RunRecord, ScalingConfig, SimConfig, System, Threshold, ViolationScan, DEFAULT_N_START,
};
use crate::precision::PrecisionMode;
use crate::real::Real;

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    if sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(median, half interquartile range)`
fn median_iqr(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(|a, b| a.total_cmp(b));
    (quantile(&v, 0.5), (quantile(&v, 0.75) - quantile(&v, 0.25)) / 2.0)
}

fn est_line(e: &EstimateWithCI) -> String {
    format!(
        "{:.4} ± {:.4} (n={}{})",
        e.estimate,
        e.stderr,
        e.samples,
        e.flag.as_ref().map(|f| format!("; {f}")).unwrap_or_default()
    )
}

fn records_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_records_csv(&mut buf, records)?;
    Ok(buf)
}

/// No violation in `[n_min, h]`.
fn eah_at(records: &[RunRecord], h: u64) -> EstimateWithCI {
    let ok = records
        .iter()
        .filter(|r| r.first_violation_n.map_or(true, |f| f > h))
        .count() as u64;
    EstimateWithCI::binomial(ok, records.len() as u64)
}

pub(crate) fn run_simulate(cfg: &SimConfig) -> Result<Partial> {
    let records = simulate_max_process(cfg)?;
    let eah = eah_from_records(&records);
    let checkpoints = cfg.checkpoints();
    let mut pts = Vec::new();
    for (i, n) in checkpoints.iter().enumerate() {
        let (med, half) = median_iqr(records.iter().map(|r| r.m_at_checkpoints[i].1).collect());
        pts.push((*n as f64, med, half));
    }
    let mut p = Partial::new(serde_json::json!({
        "system": cfg.system.name(),
        "orbits": cfg.orbits,
        "checkpoints": checkpoints,
        "eah": eah,
        "median_max": pts.iter().map(|p| p.1).collect::<Vec<_>>(),
    }));
    p.horizon = Some((cfg.n_min, cfg.n_max));
    p.lines.push(format!("{}: {} orbits", cfg.system.name(), cfg.orbits));
    for (n, med, _) in &pts {
        p.lines.push(format!("n={n} median M_n {med}"));
    }
    p.lines.push(format!("M_n >= u_n on the whole horizon: {}", est_line(&eah)));
    p.files.insert("records.csv".into(), records_csv(&records)?);
    let mut bin = Vec::new();
    write_records_bin(&mut bin, &records)?;
    p.files.insert("records.bin".into(), bin);
    p.files.insert("plot_max_process.csv".into(), plot_csv(&pts)?);
    Ok(p)
}

pub(crate) fn run_eah(cfg: &SimConfig) -> Result<Partial> {
    let records = simulate_max_process(cfg)?;
    let eah = eah_from_records(&records);
    let pts: Vec<_> = cfg
        .checkpoints()
        .into_iter()
        .filter(|n| *n >= cfg.n_min)
        .map(|n| {
            let e = eah_at(&records, n);
            (n as f64, e.estimate, e.stderr)
        })
        .collect();
    let mut p = Partial::new(serde_json::json!({
        "system": cfg.system.name(),
        "threshold": cfg.threshold,
        "violation_scan": cfg.violation_scan,
        "eah_fraction": eah,
    }));
    p.horizon = Some((cfg.n_min, cfg.n_max));
    p.lines.push(format!("eventually-always-hitting fraction: {}", est_line(&eah)));
    p.files.insert("records.csv".into(), records_csv(&records)?);
    p.files.insert("plot_eah.csv".into(), plot_csv(&pts)?);
    Ok(p)
}

pub(crate) fn run_classify(spec: &ClassifySpec) -> Result<Partial> {
    let rs = rs_classify(&spec.family, spec.theta)?;
    let sum = sum_mu_classify(&spec.family)?;
    let base = spec.base.unwrap_or(2.0);
    let cond = spec
        .k_max
        .map(|k| rs_classify_condensation(&spec.family, spec.theta, base, k))
        .transpose()?;
    let mut p = Partial::new(serde_json::json!({
        "family": spec.family,
        "theta": spec.theta,
        "rs": rs,
        "sum_mu": sum,
        "condensation": cond,
    }));
    p.lines.push(format!("family {} theta {}", spec.family.describe(), spec.theta));
    p.lines.push(format!("sum mu_n exp(-n theta mu_n): {rs}"));
    if let Some(c) = &cond {
        p.lines.push(format!("condensation base {base}: {c}"));
    }
    p.lines.push(format!("sum mu_n: {sum}"));
    let evidence = cond.as_ref().map(|c| &c.evidence).unwrap_or(&rs.evidence);
    let pts: Vec<_> = evidence
        .partial_sums
        .iter()
        .map(|(k, s)| (*k as f64, *s, 0.0))
        .collect();
    p.files.insert("verdicts.json".into(), json_bytes(&p.summary)?);
    p.files.insert("plot_partial_sums.csv".into(), plot_csv(&pts)?);
    Ok(p)
}

fn default_n_start() -> u64 {
    DEFAULT_N_START
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhilippSpec {
    pub orbits: u64,
    pub n_grid: Vec<u64>,
    #[serde(default = "default_n_start")]
    pub n_start: u64,
    /// Fixed inputs reported next to the random orbits, never pooled with them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<Real>,
}

impl PhilippSpec {
    pub fn validate(&self) -> Result<()> {
        if self.orbits == 0 && self.fixed.is_empty() {
            return Err(Error::invalid("nothing to run"));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n grid must be strictly increasing"));
        }
        Ok(())
    }
}

fn philipp_csv_rows(rows: &[PhilippRow], out: &mut Vec<Vec<String>>) {
    for r in rows {
        for (n, v) in &r.running_min {
            out.push(vec![
                r.label.clone(),
                n.to_string(),
                v.to_string(),
                r.terminated_at.map(|t| t.to_string()).unwrap_or_default(),
                r.precision_exhausted_at.map(|t| t.to_string()).unwrap_or_default(),
            ]);
        }
    }
}

pub(crate) fn run_philipp(spec: &PhilippSpec, seed: u64) -> Result<Partial> {
    let rows = philipp_statistic(spec.orbits, seed, &spec.n_grid, spec.n_start)?;
    let fixed = spec
        .fixed
        .iter()
        .map(|x| philipp_fixed(x, &spec.n_grid, spec.n_start))
        .collect::<Result<Vec<_>>>()?;
    let summary = philipp_summary(&rows, &spec.n_grid);
    let flagged = rows.iter().filter(|r| r.is_flagged()).count();
    let mut pts = Vec::new();
    for (i, n) in spec.n_grid.iter().enumerate() {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| !r.is_flagged())
            .filter_map(|r| r.running_min.get(i).map(|p| p.1))
            .filter(|v| v.is_finite())
            .collect();
        if !v.is_empty() {
            let (med, half) = median_iqr(v);
            pts.push((*n as f64, med, half));
        }
    }
    let mut p = Partial::new(serde_json::json!({
        "orbits": spec.orbits,
        "n_start": spec.n_start,
        "flagged_orbits": flagged,
        "summary": summary,
        "fixed": fixed,
        "target": 1.0 / std::f64::consts::LN_2,
    }));
    p.lines.push(format!(
        "running minimum of L_n lnln n / n over n >= {}, {} Gauss orbits",
        spec.n_start, spec.orbits
    ));
    if let Some(s) = &summary {
        p.lines.push(format!(
            "n={}: median {:.4}, quartiles [{:.4}, {:.4}], 5-95% [{:.4}, {:.4}] over {} orbits (1/ln 2 = {:.4})",
            s.n,
            s.median,
            s.q25,
            s.q75,
            s.q05,
            s.q95,
            s.orbits,
            1.0 / std::f64::consts::LN_2
        ));
    }
    if flagged > 0 {
        p.lines.push(format!("{flagged} orbits flagged and excluded"));
    }
    for f in &fixed {
        p.lines.push(format!(
            "fixed {}: {} (excluded as degenerate)",
            f.label,
            f.last().map(|v| v.to_string()).unwrap_or_else(|| "terminated".into())
        ));
    }
    let mut csv_rows = Vec::new();
    philipp_csv_rows(&rows, &mut csv_rows);
    philipp_csv_rows(&fixed, &mut csv_rows);
    p.files.insert(
        "running_min.csv".into(),
        csv_bytes(
            &["label", "n", "running_min", "terminated_at", "precision_exhausted_at"],
            &csv_rows,
        )?,
    );
    p.files.insert("plot_philipp.csv".into(), plot_csv(&pts)?);
    Ok(p)
}

fn default_ratio() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomySpec {
    pub system: System,
    pub observable: Observable,
    /// `c` in `μ_n = c lnln n / n`; `c = 0` is the degenerate level `u_n = ∞`.
    pub c_grid: Vec<f64>,
    pub horizons: Vec<u64>,
    pub n_min: u64,
    pub orbits: u64,
    #[serde(default = "default_ratio")]
    pub checkpoint_ratio: f64,
    #[serde(default)]
    pub violation_scan: ViolationScan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<PrecisionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
}

impl DichotomySpec {
    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::invalid("c grid must be non-empty and non-negative"));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|h| *h <= self.n_min) {
            return Err(Error::invalid("every horizon must exceed n_min"));
        }
        if self.orbits == 0 {
            return Err(Error::invalid("orbits must be positive"));
        }
        self.config(0)?.validate()
    }

    fn threshold(c: f64) -> Result<Threshold> {
        if c == 0.0 {
            Ok(Threshold::Level { u: f64::INFINITY })
        } else {
            Ok(Threshold::Family {
                family: ThresholdFamily::cloglog(c)?,
            })
        }
    }

    fn config(&self, seed: u64) -> Result<SimConfig> {
        let first = Self::threshold(*self.c_grid.first().unwrap_or(&1.0))?;
        let mut cfg = SimConfig::new(self.system.clone(), Some(self.observable.clone()), first);
        cfg.n_min = self.n_min;
        cfg.n_max = *self.horizons.iter().max().unwrap_or(&0);
        cfg.checkpoint_ratio = self.checkpoint_ratio;
        cfg.extra_checkpoints = self.horizons.clone();
        cfg.violation_scan = self.violation_scan;
        cfg.orbits = self.orbits;
        cfg.seed = seed;
        cfg.precision = self.precision;
        cfg.burn_in = self.burn_in;
        Ok(cfg)
    }
}

pub(crate) fn run_dichotomy_sweep(spec: &DichotomySpec, seed: u64) -> Result<Partial> {
    let cfg = spec.config(seed)?;
    let thresholds = spec
        .c_grid
        .iter()
        .map(|c| DichotomySpec::threshold(*c))
        .collect::<Result<Vec<_>>>()?;
    let sets = simulate_sweep(&cfg, &thresholds)?;
    let mut horizons = spec.horizons.clone();
    horizons.sort_unstable();
    horizons.dedup();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut p = Partial::new(serde_json::Value::Null);
    p.horizon = Some((cfg.n_min, cfg.n_max));
    p.lines.push(format!(
        "{} at {}, {} orbits, violations checked {}",
        cfg.system.name(),
        spec.observable.center.describe(),
        spec.orbits,
        match spec.violation_scan {
            ViolationScan::EveryStep => "at every n",
            ViolationScan::Checkpoints => "at checkpoints",
        }
    ));
    for &h in &horizons {
        let mut pts = Vec::new();
        for (c, recs) in spec.c_grid.iter().zip(&sets) {
            let e = eah_at(recs, h);
            p.lines.push(format!("c={c} horizon={h} eah {}", est_line(&e)));
            rows.push(vec![
                c.to_string(),
                h.to_string(),
                e.estimate.to_string(),
                e.stderr.to_string(),
                e.samples.to_string(),
                e.flag.clone().unwrap_or_default(),
            ]);
            table.push(serde_json::json!({"c": c, "horizon": h, "eah": e}));
            pts.push((*c, e.estimate, e.stderr));
        }
        p.files.insert(format!("plot_phase_h{h}.csv"), plot_csv(&pts)?);
    }
    p.summary = serde_json::json!({ "phase": table, "n_min": cfg.n_min });
    p.files.insert(
        "phase.csv".into(),
        csv_bytes(&["c", "horizon", "eah_fraction", "stderr", "orbits", "flag"], &rows)?,
    );
    Ok(p)
}

pub(crate) fn run_theta_zero_scaling(cfg: &ScalingConfig) -> Result<Partial> {
    let fit = estimate_theta_zero_scaling(cfg)?;
    let mut p = Partial::new(serde_json::to_value(&fit)?);
    p.lines.push(format!(
        "LSV a={}: slope {:.4} ± {:.4}, predicted 1/(1-a) = {:.4}",
        cfg.a, fit.slope, fit.slope_stderr, fit.predicted
    ));
    if let Some(f) = &fit.flag {
        p.lines.push(format!("flag: {f}"));
    }
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for r in &fit.rows {
        rows.push(vec![
            r.r.to_string(),
            r.mu_u.estimate.to_string(),
            r.mu_u.stderr.to_string(),
            r.mu_a.estimate.to_string(),
            r.mu_a.stderr.to_string(),
            r.visits.to_string(),
            r.exits.to_string(),
        ]);
        if r.exits > 0 {
            pts.push((
                r.mu_u.estimate.ln(),
                r.mu_a.estimate.ln(),
                r.mu_a.stderr / r.mu_a.estimate,
            ));
        }
    }
    p.files.insert(
        "scaling.csv".into(),
        csv_bytes(
            &["r", "mu_u", "mu_u_stderr", "mu_a", "mu_a_stderr", "visits", "exits"],
            &rows,
        )?,
    );
    p.files.insert("plot_scaling.csv".into(), plot_csv(&pts)?);
    Ok(p)
}
