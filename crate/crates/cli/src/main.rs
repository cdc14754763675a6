//! `maxlab`: exact survivor laws, orbit simulations, series verdicts and experiment manifests
//! from the command line.
//!
//! Every subcommand builds (or loads, with `--manifest`) an experiment manifest, runs it and
//! writes the outputs under `<out>/<name>/<hash>/`. Exit codes: 0 success, 2 invalid input,
//! 3 resource cap reached, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxlab::criteria::ThresholdFamily;
use maxlab::experiments::{
    out_root, run_to_dir, BlockingGrid, BlockingGridSpec, ClassifySpec, ExactQuery, ExactSpec,
    Experiment, ExperimentManifest, PhilippSpec, ThetaSpec,
};
use maxlab::intervals::IntervalSet;
use maxlab::maps::{BallSide, MapSpec, MeasureSpec, Observable, Psi};
use maxlab::montecarlo::{with_workers, SimConfig, System, ThetaMethod, Threshold, ViolationScan};
use maxlab::precision::PrecisionMode;
use maxlab::rational::{parse_rational, to_f64, Q};
use maxlab::real::Real;
use maxlab::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "maxlab", version, about = "Maxima of dynamical systems and dependent processes")]
struct Cli {
    /// Load this manifest instead of building one from flags.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output root (default: $MAXLAB_OUT or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the manifest seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Never changes the numbers.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Manifest name for flag-built runs (default: the subcommand).
    #[arg(long, global = true)]
    name: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact survivor law, short-return sum, cluster set or recurrence measure.
    Exact(ExactArgs),
    /// Maximum process along simulated orbits.
    Simulate(SimArgs),
    /// Series verdict for a threshold family.
    Classify(ClassifyArgs),
    /// Extremal index: closed form, exact cluster set and runs estimate.
    Theta(ThetaArgs),
    /// Fraction of orbits with M_n >= u_n on the whole horizon.
    Eah(SimArgs),
    /// Blocking bound on a grid of exact configurations.
    Blocking(BlockingArgs),
    /// Running minimum of L_n lnln n / n along continued fractions.
    Philipp(PhilippArgs),
    /// Runs any manifest given with --manifest.
    Experiment,
}

#[derive(Args, Debug)]
struct MapArgs {
    /// doubling, times:3, gauss, lsv:1/2, logistic:4
    #[arg(long)]
    map: Option<String>,
    /// lebesgue or gauss (default: the natural measure of the map)
    #[arg(long)]
    measure: Option<String>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Target set, e.g. 0:1/4 or 0:1/8,1/2:5/8
    #[arg(long)]
    ball: Option<String>,
    /// Survivor law at these n.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    /// Short-return sum up to p instead.
    #[arg(long)]
    xi: Option<u64>,
    /// Cluster set A^(q) instead.
    #[arg(long)]
    aq: Option<u64>,
    /// Recurrence measure for radius r (p/q) at each --n instead.
    #[arg(long)]
    recurrence: Option<String>,
}

#[derive(Args, Debug)]
struct ObsArgs {
    /// golden, silver, p/q, quad:p:d:q or float:x
    #[arg(long)]
    center: Option<String>,
    /// neglog, power:k or floor
    #[arg(long, default_value = "neglog")]
    psi: String,
    /// two-sided, left or right
    #[arg(long, default_value = "two-sided")]
    side: String,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// A map, pareto, or moving-max:a
    #[arg(long)]
    system: Option<String>,
    #[command(flatten)]
    obs: ObsArgs,
    /// level:u, radius:r, mass:m, or a family such as cloglog:1.5
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long, default_value_t = 1000)]
    n_max: u64,
    #[arg(long, default_value_t = 1)]
    n_min: u64,
    #[arg(long, default_value_t = 100)]
    orbits: u64,
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    /// every-step or checkpoints
    #[arg(long, default_value = "every-step")]
    scan: String,
    /// float64, bigfloat:bits or exact
    #[arg(long)]
    precision: Option<String>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// cloglog:c, power:s, logpow:b, rsb:c or table:v1,v2,...
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Also run the condensation classifier to this depth.
    #[arg(long)]
    k_max: Option<u64>,
    #[arg(long)]
    base: Option<f64>,
}

#[derive(Args, Debug)]
struct ThetaArgs {
    #[arg(long)]
    map: Option<String>,
    /// pareto or moving-max:a instead of a map
    #[arg(long)]
    system: Option<String>,
    #[command(flatten)]
    obs: ObsArgs,
    #[arg(long, default_value_t = 1)]
    q: u64,
    /// Target mass mu(B), exact (1/1000 or 1e-3).
    #[arg(long, default_value = "1/1000")]
    mu_target: String,
    /// Observations per orbit.
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, default_value_t = 20)]
    orbits: u64,
    /// runs:q or blocks:b (default runs with the same q)
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    precision: Option<String>,
}

#[derive(Args, Debug)]
struct BlockingArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Target sets; repeat for several.
    #[arg(long)]
    ball: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    l: Vec<u64>,
    /// Block-length exponents p = floor(l^s), as p/q.
    #[arg(long, value_delimiter = ',')]
    s: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    t: Vec<u64>,
}

#[derive(Args, Debug)]
struct PhilippArgs {
    #[arg(long, default_value_t = 100)]
    orbits: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [1000u64, 10_000, 100_000, 1_000_000])]
    n_grid: Vec<u64>,
    #[arg(long, default_value_t = maxlab::montecarlo::DEFAULT_N_START)]
    n_start: u64,
    /// Fixed inputs reported separately.
    #[arg(long)]
    fixed: Vec<String>,
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Invalid(format!("missing --{flag} (or give --manifest)")))
}

fn measure(map: &MapSpec, s: &Option<String>) -> Result<Option<MeasureSpec>> {
    match s.as_deref() {
        None => Ok(None),
        Some("lebesgue") => Ok(Some(MeasureSpec::Lebesgue)),
        Some("gauss") => Ok(Some(MeasureSpec::Gauss)),
        Some("natural") => Ok(Some(MeasureSpec::natural_for(map))),
        Some(o) => Err(Error::Invalid(format!("unknown measure {o:?}"))),
    }
}

fn observable(a: &ObsArgs) -> Result<Option<Observable>> {
    let Some(c) = &a.center else { return Ok(None) };
    let side = match a.side.as_str() {
        "two-sided" | "both" => BallSide::TwoSided,
        "left" => BallSide::LeftOnly,
        "right" => BallSide::RightOnly,
        o => return Err(Error::Invalid(format!("unknown ball side {o:?}"))),
    };
    Observable::new(Real::parse(c)?, Psi::parse(&a.psi)?, side).map(Some)
}

fn precision(s: &Option<String>) -> Result<Option<PrecisionMode>> {
    s.as_deref()
        .map(|p| PrecisionMode::parse(p).ok_or_else(|| Error::Invalid(format!("unknown precision {p:?}"))))
        .transpose()
}

fn threshold(s: &str) -> Result<Threshold> {
    let num = |v: &str| -> Result<f64> {
        match v {
            "inf" => Ok(f64::INFINITY),
            _ => Ok(to_f64(&parse_rational(v)?)),
        }
    };
    match s.split_once(':') {
        Some(("level", u)) => Ok(Threshold::Level { u: num(u)? }),
        Some(("radius", r)) => Ok(Threshold::Radius { r: num(r)? }),
        Some(("mass", m)) => Ok(Threshold::Mass { mass: num(m)? }),
        _ => Ok(Threshold::Family {
            family: ThresholdFamily::parse(s)?,
        }),
    }
}

fn exact_spec(a: &ExactArgs) -> Result<ExactSpec> {
    let map = MapSpec::parse(need(a.map.map.as_deref(), "map")?)?;
    let measure = measure(&map, &a.map.measure)?;
    let query = if let Some(r) = &a.recurrence {
        ExactQuery::Recurrence {
            r: parse_rational(r)?,
            n: a.n.clone(),
        }
    } else {
        let ball = IntervalSet::parse(need(a.ball.as_deref(), "ball")?)?;
        match (a.xi, a.aq) {
            (Some(p), None) => ExactQuery::Xi { ball, p },
            (None, Some(q)) => ExactQuery::Aq { ball, q },
            (None, None) => ExactQuery::SurvivorLaw { ball, n: a.n.clone() },
            _ => return Err(Error::Invalid("give at most one of --xi and --aq".into())),
        }
    };
    Ok(ExactSpec { map, measure, query })
}

fn sim_config(a: &SimArgs) -> Result<SimConfig> {
    let system = System::parse(need(a.system.as_deref(), "system")?)?;
    let mut cfg = SimConfig::new(
        system,
        observable(&a.obs)?,
        threshold(need(a.threshold.as_deref(), "threshold")?)?,
    );
    cfg.n_max = a.n_max;
    cfg.n_min = a.n_min;
    cfg.orbits = a.orbits;
    cfg.checkpoint_ratio = a.ratio;
    cfg.violation_scan = ViolationScan::parse(&a.scan)?;
    cfg.precision = precision(&a.precision)?;
    Ok(cfg)
}

fn theta_spec(a: &ThetaArgs) -> Result<ThetaSpec> {
    let system = match (&a.map, &a.system) {
        (Some(m), None) => System::map(MapSpec::parse(m)?),
        (None, Some(s)) => System::parse(s)?,
        _ => return Err(Error::Invalid("give exactly one of --map and --system".into())),
    };
    Ok(ThetaSpec {
        label: None,
        system,
        observable: observable(&a.obs)?,
        q: a.q,
        mu_target: parse_rational(&a.mu_target)?,
        steps: a.steps,
        orbits: a.orbits,
        method: a.method.as_deref().map(ThetaMethod::parse).transpose()?,
        precision: precision(&a.precision)?,
    })
}

fn blocking_spec(a: &BlockingArgs) -> Result<BlockingGridSpec> {
    let map = MapSpec::parse(need(a.map.map.as_deref(), "map")?)?;
    let measure = measure(&map, &a.map.measure)?;
    let s = a.s.iter().map(|s| parse_rational(s)).collect::<Result<Vec<Q>>>()?;
    Ok(BlockingGridSpec {
        grids: vec![BlockingGrid {
            measure,
            targets: a.ball.iter().map(|b| IntervalSet::parse(b)).collect::<Result<_>>()?,
            l: a.l.clone(),
            s,
            t: a.t.clone(),
            appendix_a: Vec::new(),
            map,
        }],
    })
}

/// Kinds a subcommand accepts from `--manifest`.
fn accepts(cmd: &Command, kind: &str) -> bool {
    match cmd {
        Command::Exact(_) => kind == "exact",
        Command::Simulate(_) => kind == "simulate",
        Command::Classify(_) => kind == "classify",
        Command::Theta(_) => matches!(kind, "theta" | "theta_suite"),
        Command::Eah(_) => matches!(kind, "eah" | "dichotomy_sweep"),
        Command::Blocking(_) => kind == "blocking_grid",
        Command::Philipp(_) => kind == "philipp",
        Command::Experiment => true,
    }
}

fn build(cli: &Cli) -> Result<ExperimentManifest> {
    if let Some(path) = &cli.manifest {
        let m = ExperimentManifest::load(path)?;
        if !accepts(&cli.command, m.experiment.kind()) {
            return Err(Error::Invalid(format!(
                "manifest kind {} does not match this subcommand",
                m.experiment.kind()
            )));
        }
        return Ok(match cli.seed {
            Some(s) => m.with_seed(s),
            None => m,
        });
    }
    let (default_name, experiment) = match &cli.command {
        Command::Exact(a) => ("exact", Experiment::Exact(exact_spec(a)?)),
        Command::Simulate(a) => ("simulate", Experiment::Simulate(sim_config(a)?)),
        Command::Eah(a) => ("eah", Experiment::Eah(sim_config(a)?)),
        Command::Classify(a) => (
            "classify",
            Experiment::Classify(ClassifySpec {
                family: ThresholdFamily::parse(need(a.family.as_deref(), "family")?)?,
                theta: a.theta,
                k_max: a.k_max,
                base: a.base,
            }),
        ),
        Command::Theta(a) => ("theta", Experiment::Theta(theta_spec(a)?)),
        Command::Blocking(a) => ("blocking", Experiment::BlockingGrid(blocking_spec(a)?)),
        Command::Philipp(a) => (
            "philipp",
            Experiment::Philipp(PhilippSpec {
                orbits: a.orbits,
                n_grid: a.n_grid.clone(),
                n_start: a.n_start,
                fixed: a.fixed.iter().map(|x| Real::parse(x)).collect::<Result<_>>()?,
            }),
        ),
        Command::Experiment => return Err(Error::Invalid("experiment needs --manifest".into())),
    };
    let name = cli.name.clone().unwrap_or_else(|| default_name.to_string());
    let m = ExperimentManifest::new(name, cli.seed.unwrap_or(0), experiment);
    m.validate()?;
    Ok(m)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let manifest = build(cli)?;
    let root = cli.out.clone().unwrap_or_else(out_root);
    let (dir, out) = with_workers(cli.workers, || run_to_dir(&manifest, &root))??;
    print!("{}", out.report);
    println!("outputs: {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_resource_cap() {
        3
    } else if matches!(e, Error::Io(_) | Error::Csv(_)) {
        1
    } else {
        2
    }
}
