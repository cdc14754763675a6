//! Experiment manifests and their runners.
//!
//! A manifest pins every knob of one experiment. Its hash names the output directory
//! `<root>/<name>/<hash>/`, which holds the manifest itself, CSV tables, a `summary.json`
//! and one `plot_*.csv` with columns `x,y,yerr` per figure.

mod exact;
mod sim;
mod theta;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criteria::ThresholdFamily;
use crate::error::{Error, Result};
use crate::hashing::config_hash;
use crate::montecarlo::{ScalingConfig, SimConfig};

pub use exact::{BlockingGrid, BlockingGridSpec, ExactQuery, ExactSpec};
pub use sim::{DichotomySpec, PhilippSpec};
pub use theta::ThetaSpec;

pub const SCHEMA: &str = "v1";
/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "MAXLAB_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub seed: u64,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifySpec {
    pub family: ThresholdFamily,
    pub theta: f64,
    /// Condensation depth; the condensation verdict is skipped without it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u64>,
    /// Condensation base, default 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Exact(ExactSpec),
    Simulate(SimConfig),
    Eah(SimConfig),
    Classify(ClassifySpec),
    Theta(ThetaSpec),
    ThetaSuite { entries: Vec<ThetaSpec> },
    BlockingGrid(BlockingGridSpec),
    Philipp(PhilippSpec),
    DichotomySweep(DichotomySpec),
    ThetaZeroScaling(ScalingConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Exact(_) => "exact",
            Experiment::Simulate(_) => "simulate",
            Experiment::Eah(_) => "eah",
            Experiment::Classify(_) => "classify",
            Experiment::Theta(_) => "theta",
            Experiment::ThetaSuite { .. } => "theta_suite",
            Experiment::BlockingGrid(_) => "blocking_grid",
            Experiment::Philipp(_) => "philipp",
            Experiment::DichotomySweep(_) => "dichotomy_sweep",
            Experiment::ThetaZeroScaling(_) => "theta_zero_scaling",
        }
    }
}

impl ExperimentManifest {
    pub fn new(name: impl Into<String>, seed: u64, experiment: Experiment) -> Self {
        ExperimentManifest {
            schema: SCHEMA.into(),
            name: name.into(),
            description: None,
            seed,
            experiment,
        }
        .normalized()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ExperimentManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m.normalized())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Pretty JSON with a trailing newline; loading it back gives the same bytes.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.normalized())?;
        s.push('\n');
        Ok(s)
    }

    pub fn hash(&self) -> Result<String> {
        config_hash(&self.normalized())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.normalized()
    }

    /// Copies the manifest seed into embedded configs that carry their own.
    pub fn normalized(&self) -> Self {
        let mut m = self.clone();
        match &mut m.experiment {
            Experiment::Simulate(c) | Experiment::Eah(c) => c.seed = m.seed,
            Experiment::ThetaZeroScaling(c) => c.seed = m.seed,
            _ => {}
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::invalid(format!(
                "unsupported manifest schema {:?}, expected {SCHEMA:?}",
                self.schema
            )));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || self.name.starts_with('.')
        {
            return Err(Error::invalid(format!(
                "manifest name {:?} must be non-empty [A-Za-z0-9._-]",
                self.name
            )));
        }
        match &self.experiment {
            Experiment::Exact(s) => s.validate(),
            Experiment::Simulate(c) | Experiment::Eah(c) => c.validate(),
            Experiment::Classify(s) => {
                if !(s.theta > 0.0 && s.theta <= 1.0) {
                    return Err(Error::invalid("theta must lie in (0,1]"));
                }
                Ok(())
            }
            Experiment::Theta(s) => s.validate(),
            Experiment::ThetaSuite { entries } => {
                if entries.is_empty() {
                    return Err(Error::invalid("theta suite has no entries"));
                }
                entries.iter().try_for_each(|e| e.validate())
            }
            Experiment::BlockingGrid(s) => s.validate(),
            Experiment::Philipp(s) => s.validate(),
            Experiment::DichotomySweep(s) => s.validate(),
            Experiment::ThetaZeroScaling(c) => {
                if !(c.a > 0.0 && c.a < 1.0) {
                    return Err(Error::invalid("LSV parameter must lie in (0,1)"));
                }
                if c.orbits == 0 || c.steps_per_orbit == 0 || c.radii.len() < 2 {
                    return Err(Error::invalid("need orbits, steps and at least two radii"));
                }
                Ok(())
            }
        }
    }
}

/// Everything one run produces, keyed by file name.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: String,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl RunOutput {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// What a runner hands back before the common files are attached.
pub(crate) struct Partial {
    pub lines: Vec<String>,
    pub summary: serde_json::Value,
    pub files: BTreeMap<String, Vec<u8>>,
    /// `(n_min, n_max)` for runs with an "eventually" horizon.
    pub horizon: Option<(u64, u64)>,
}

impl Partial {
    pub fn new(summary: serde_json::Value) -> Self {
        Partial {
            lines: Vec::new(),
            summary,
            files: BTreeMap::new(),
            horizon: None,
        }
    }
}

/// `$MAXLAB_OUT`, or `out`.
pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn output_dir(root: &Path, manifest: &ExperimentManifest) -> Result<PathBuf> {
    Ok(root.join(&manifest.name).join(manifest.hash()?))
}

pub fn run(manifest: &ExperimentManifest) -> Result<RunOutput> {
    manifest.validate()?;
    let m = manifest.normalized();
    let hash = m.hash()?;
    let seed = m.seed;
    let part = match &m.experiment {
        Experiment::Exact(s) => exact::run_exact(s)?,
        Experiment::Simulate(c) => sim::run_simulate(c)?,
        Experiment::Eah(c) => sim::run_eah(c)?,
        Experiment::Classify(s) => sim::run_classify(s)?,
        Experiment::Theta(s) => theta::run_theta_suite(std::slice::from_ref(s), seed)?,
        Experiment::ThetaSuite { entries } => theta::run_theta_suite(entries, seed)?,
        Experiment::BlockingGrid(s) => exact::run_blocking_grid(s)?,
        Experiment::Philipp(s) => sim::run_philipp(s, seed)?,
        Experiment::DichotomySweep(s) => sim::run_dichotomy_sweep(s, seed)?,
        Experiment::ThetaZeroScaling(c) => sim::run_theta_zero_scaling(c)?,
    };
    let mut summary = serde_json::json!({
        "name": m.name,
        "kind": m.experiment.kind(),
        "config_hash": hash,
        "seed": seed,
        "result": part.summary,
    });
    let mut report = format!("{} [{}] config_hash={hash} seed={seed}\n", m.name, m.experiment.kind());
    if let Some((n_min, n_max)) = part.horizon {
        summary["horizon"] = serde_json::json!({ "n_min": n_min, "n_max": n_max });
        report.push_str(&format!(
            "horizon: eventually/i.o. statements are checked on n in [{n_min}, {n_max}]\n"
        ));
    }
    for line in &part.lines {
        report.push_str(line);
        report.push('\n');
    }
    let mut files = part.files;
    files.insert("manifest.json".into(), m.to_json()?.into_bytes());
    let mut s = serde_json::to_vec_pretty(&summary)?;
    s.push(b'\n');
    files.insert("summary.json".into(), s);
    files.insert("report.txt".into(), report.clone().into_bytes());
    Ok(RunOutput { report, files })
}

/// Runs the manifest and writes its outputs under `root`.
pub fn run_to_dir(manifest: &ExperimentManifest, root: &Path) -> Result<(PathBuf, RunOutput)> {
    let out = run(manifest)?;
    let dir = output_dir(root, manifest)?;
    out.write_to(&dir)?;
    Ok((dir, out))
}

/// Rows `x,y,yerr`.
pub(crate) fn plot_csv(points: &[(f64, f64, f64)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "yerr"])?;
    for (x, y, e) in points {
        w.write_record([x.to_string(), y.to_string(), e.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub(crate) fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub(crate) fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Runs exact-engine work on its own pool so it never queues behind orbit simulations.
pub(crate) fn on_exact_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(rayon::current_num_threads())
        .thread_name(|i| format!("exact-{i}"))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
