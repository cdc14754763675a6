//! Exact-engine experiments: survivor laws, short-return sums, cluster sets and the
//! blocking-bound grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{csv_bytes, json_bytes, on_exact_pool, plot_csv, Partial};
use crate::error::{Error, Result};
use crate::intervals::{AppendixAReport, BlockingReport, ExactEngine, IntervalSet};
use crate::maps::{MapSpec, MeasureSpec};
use crate::rational::{fmt_q, to_f64, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExactQuery {
    /// `μ(M_n ≤ u)` for the target `ball` at each `n`.
    SurvivorLaw { ball: IntervalSet, n: Vec<u64> },
    /// `Σ_{j=1}^p μ(B ∩ f^{-j} B)`
    Xi { ball: IntervalSet, p: u64 },
    /// `θ = μ(A^(q))/μ(B)`
    Aq { ball: IntervalSet, q: u64 },
    /// `μ{x : |f^n x − x| < r}` at each `n`.
    Recurrence {
        #[serde(with = "crate::rational::wire")]
        r: Q,
        n: Vec<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSpec {
    pub map: MapSpec,
    /// Defaults to the natural invariant measure of the map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    pub query: ExactQuery,
}

impl ExactSpec {
    pub fn validate(&self) -> Result<()> {
        self.map.validate()?;
        if self.map.affine_branches().is_none() {
            return Err(Error::Unsupported(format!(
                "exact engine needs a piecewise-affine map, got {}",
                self.map.name()
            )));
        }
        match &self.query {
            ExactQuery::SurvivorLaw { n, .. } | ExactQuery::Recurrence { n, .. } if n.is_empty() => {
                Err(Error::invalid("need at least one n"))
            }
            ExactQuery::Aq { q: 0, .. } => Err(Error::invalid("q must be at least 1")),
            _ => Ok(()),
        }
    }

    fn engine(&self) -> Result<ExactEngine> {
        engine(&self.map, self.measure.as_ref())
    }
}

fn engine(map: &MapSpec, measure: Option<&MeasureSpec>) -> Result<ExactEngine> {
    let spec = measure.cloned().unwrap_or_else(|| MeasureSpec::natural_for(map));
    ExactEngine::new(map, &spec.resolve(map)?)
}

fn dec(x: &Q) -> String {
    to_f64(x).to_string()
}

pub(crate) fn run_exact(spec: &ExactSpec) -> Result<Partial> {
    on_exact_pool(|| run_exact_inner(spec))?
}

fn run_exact_inner(spec: &ExactSpec) -> Result<Partial> {
    let e = spec.engine()?;
    let map = spec.map.name();
    match &spec.query {
        ExactQuery::SurvivorLaw { ball, n } => {
            let table = e.exact_mn_law(ball, n)?;
            let mut p = Partial::new(serde_json::to_value(&table)?);
            p.lines.push(format!("{map}, target {}", ball.describe()));
            for row in &table.rows {
                p.lines.push(format!(
                    "n={} survivor measure {} = {}",
                    row.n,
                    fmt_q(&row.survivor_measure),
                    dec(&row.survivor_measure)
                ));
            }
            let mut csv = Vec::new();
            table.write_csv(&mut csv)?;
            p.files.insert("survivor_law.csv".into(), csv);
            let pts: Vec<_> = table
                .rows
                .iter()
                .map(|r| (r.n as f64, to_f64(&r.survivor_measure), 0.0))
                .collect();
            p.files.insert("plot_survivor_law.csv".into(), plot_csv(&pts)?);
            Ok(p)
        }
        ExactQuery::Xi { ball, p: depth } => {
            let terms = e.xi_terms(ball, *depth)?;
            let total: Q = terms.iter().sum();
            let mut p = Partial::new(serde_json::json!({
                "target": ball.describe(),
                "p": depth,
                "xi": fmt_q(&total),
                "terms": terms.iter().map(fmt_q).collect::<Vec<_>>(),
            }));
            p.lines.push(format!("{map}, target {}", ball.describe()));
            p.lines.push(format!("Xi(p={depth}) = {} = {}", fmt_q(&total), dec(&total)));
            let rows: Vec<Vec<String>> = terms
                .iter()
                .enumerate()
                .map(|(j, t)| vec![(j + 1).to_string(), fmt_q(t), dec(t)])
                .collect();
            p.files.insert("xi_terms.csv".into(), csv_bytes(&["j", "term", "decimal"], &rows)?);
            let pts: Vec<_> = terms
                .iter()
                .enumerate()
                .map(|(j, t)| ((j + 1) as f64, to_f64(t), 0.0))
                .collect();
            p.files.insert("plot_xi_terms.csv".into(), plot_csv(&pts)?);
            Ok(p)
        }
        ExactQuery::Aq { ball, q } => {
            let (set, theta) = e.exact_aq_theta(ball, *q)?;
            let mu_a = e.measure(&set)?;
            let mut p = Partial::new(serde_json::json!({
                "target": ball.describe(),
                "q": q,
                "theta": fmt_q(&theta),
                "mu_aq": fmt_q(&mu_a),
                "aq_set": set.describe(),
            }));
            p.lines.push(format!("{map}, target {}", ball.describe()));
            p.lines.push(format!("A^({q}) = {}", set.describe()));
            p.lines.push(format!("theta = {} = {}", fmt_q(&theta), dec(&theta)));
            p.files.insert(
                "aq.csv".into(),
                csv_bytes(
                    &["q", "mu_aq", "theta", "decimal"],
                    &[vec![q.to_string(), fmt_q(&mu_a), fmt_q(&theta), dec(&theta)]],
                )?,
            );
            Ok(p)
        }
        ExactQuery::Recurrence { r, n } => {
            let values = n
                .iter()
                .map(|k| e.exact_recurrence_measure(r, *k))
                .collect::<Result<Vec<Q>>>()?;
            let mut p = Partial::new(serde_json::json!({
                "r": fmt_q(r),
                "rows": n.iter().zip(&values).map(|(k, v)| serde_json::json!({"n": k, "measure": fmt_q(v)})).collect::<Vec<_>>(),
            }));
            p.lines.push(format!("{map}, r = {}", fmt_q(r)));
            let mut rows = Vec::new();
            let mut pts = Vec::new();
            for (k, v) in n.iter().zip(&values) {
                p.lines.push(format!("n={k} recurrence measure {} = {}", fmt_q(v), dec(v)));
                rows.push(vec![k.to_string(), fmt_q(v), dec(v)]);
                pts.push((*k as f64, to_f64(v), 0.0));
            }
            p.files.insert("recurrence.csv".into(), csv_bytes(&["n", "measure", "decimal"], &rows)?);
            p.files.insert("plot_recurrence.csv".into(), plot_csv(&pts)?);
            Ok(p)
        }
    }
}

/// One map and the cartesian product of its targets and `(l, s, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockingGrid {
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    pub targets: Vec<IntervalSet>,
    pub l: Vec<u64>,
    #[serde(with = "crate::rational::wire_vec")]
    pub s: Vec<Q>,
    pub t: Vec<u64>,
    /// `(r, k)` pairs for `0 ≤ μ(S_r) − μ(S_{r+k}) ≤ k μ(B)`, checked on every target.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub appendix_a: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockingGridSpec {
    pub grids: Vec<BlockingGrid>,
}

impl BlockingGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty() {
            return Err(Error::invalid("blocking grid is empty"));
        }
        for g in &self.grids {
            g.map.validate()?;
            if g.targets.is_empty() || g.l.is_empty() || g.s.is_empty() || g.t.is_empty() {
                return Err(Error::invalid("every blocking grid needs targets, l, s and t"));
            }
        }
        Ok(())
    }
}

enum Job<'a> {
    Blocking {
        grid: usize,
        target: &'a IntervalSet,
        l: u64,
        s: &'a Q,
        t: u64,
    },
    AppendixA {
        grid: usize,
        target: &'a IntervalSet,
        r: u64,
        k: u64,
    },
}

enum Outcome {
    Blocking(BlockingReport),
    AppendixA(AppendixAReport),
}

pub(crate) fn run_blocking_grid(spec: &BlockingGridSpec) -> Result<Partial> {
    let engines = spec
        .grids
        .iter()
        .map(|g| engine(&g.map, g.measure.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (gi, g) in spec.grids.iter().enumerate() {
        for target in &g.targets {
            for &l in &g.l {
                for s in &g.s {
                    for &t in &g.t {
                        jobs.push(Job::Blocking {
                            grid: gi,
                            target,
                            l,
                            s,
                            t,
                        });
                    }
                }
            }
            for &(r, k) in &g.appendix_a {
                jobs.push(Job::AppendixA {
                    grid: gi,
                    target,
                    r,
                    k,
                });
            }
        }
    }
    let outcomes: Vec<Result<Outcome>> = on_exact_pool(|| {
        jobs.par_iter()
            .map(|j| match *j {
                Job::Blocking { grid, target, l, s, t } => {
                    engines[grid].blocking_report(target, l, s, t).map(Outcome::Blocking)
                }
                Job::AppendixA { grid, target, r, k } => {
                    engines[grid].appendix_a_check(target, r, k).map(Outcome::AppendixA)
                }
            })
            .collect()
    })?;

    let mut header = vec!["map", "target"];
    header.extend(BlockingReport::CSV_HEADER);
    let mut rows = Vec::new();
    let mut a_rows = Vec::new();
    let mut violations = Vec::new();
    let mut a_violations = Vec::new();
    let mut pts = Vec::new();
    let mut p = Partial::new(serde_json::Value::Null);
    for (job, out) in jobs.iter().zip(outcomes) {
        match (job, out?) {
            (Job::Blocking { grid, target, .. }, Outcome::Blocking(rep)) => {
                let map = spec.grids[*grid].map.name();
                let mut row = vec![map.clone(), target.describe()];
                row.extend(rep.csv_row());
                rows.push(row);
                pts.push((pts.len() as f64, to_f64(&(&rep.rhs - &rep.lhs)), 0.0));
                if !rep.holds {
                    let i = violations.len();
                    let mut g = Vec::new();
                    rep.write_gamma_csv(&mut g)?;
                    p.files.insert(format!("violation_{i}_gamma.csv"), g);
                    violations.push(serde_json::json!({
                        "map": map,
                        "target": target.describe(),
                        "report": rep,
                    }));
                }
            }
            (Job::AppendixA { grid, target, .. }, Outcome::AppendixA(rep)) => {
                let map = spec.grids[*grid].map.name();
                a_rows.push(vec![
                    map.clone(),
                    target.describe(),
                    rep.r.to_string(),
                    rep.k.to_string(),
                    fmt_q(&rep.difference),
                    fmt_q(&rep.slack),
                    rep.holds.to_string(),
                ]);
                if !rep.holds {
                    a_violations.push(serde_json::json!({
                        "map": map,
                        "target": target.describe(),
                        "report": rep,
                    }));
                }
            }
            _ => unreachable!("outcomes are produced in job order"),
        }
    }
    let full_block_violations = rows.iter().filter(|r| r[r.len() - 1] == "false").count();
    p.summary = serde_json::json!({
        "configurations": rows.len(),
        "violations": violations.len(),
        "full_block_violations": full_block_violations,
        "appendix_a_checks": a_rows.len(),
        "appendix_a_violations": a_violations.len(),
    });
    p.lines.push(format!(
        "blocking bound: {} configurations, {} violations ({} with the full-block lhs)",
        rows.len(),
        violations.len(),
        full_block_violations
    ));
    if !a_rows.is_empty() {
        p.lines.push(format!(
            "survivor increments: {} checks, {} violations",
            a_rows.len(),
            a_violations.len()
        ));
    }
    for v in violations.iter().chain(&a_violations) {
        p.lines.push(format!("VIOLATION {v}"));
    }
    p.files.insert("blocking.csv".into(), csv_bytes(&header, &rows)?);
    if !a_rows.is_empty() {
        p.files.insert(
            "appendix_a.csv".into(),
            csv_bytes(&["map", "target", "r", "k", "difference", "slack", "holds"], &a_rows)?,
        );
    }
    let all: Vec<_> = violations.into_iter().chain(a_violations).collect();
    p.files.insert("violations.json".into(), json_bytes(&all)?);
    p.files.insert("plot_blocking_slack.csv".into(), plot_csv(&pts)?);
    Ok(p)
}
