//! Command line front end. A run is fully described by an experiment config
//! (or the equivalent flags): descriptors in, CSV/JSON artifacts out. Nothing
//! reads clocks or random state, so rerunning a config reproduces every
//! output byte.
//!
//! Exit codes: 0 all requested checks passed, 1 a check failed or a
//! computation errored (report paths are printed first), 2 the config or an
//! input descriptor violates the schema.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};
use esterle::{
    default_eta_schedule, delta_batch, removability_test, u_sequence, verify_theorem,
    witness_points, write_measure_curve_csv, write_verify_csv, Contour, DeltaGrid, FnDescriptor,
    InnerEval, MajorantOmega, MeasureDescriptor, QuadParams, RemovabilityParams, RhoCurve,
    RuleParams, TestFn, ThinSet, Verdict, DEFAULT_REL_TOL,
};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    /// Schema or descriptor violation: exit 2.
    Config(String),
    /// Failed verification or runtime error: exit 1.
    Failure(String),
}

macro_rules! failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Failure(e.to_string())
            }
        }
    )*};
}

failure_from!(
    esterle::ThinSetError,
    esterle::MajorantError,
    esterle::EsterleError,
    esterle::InnerError,
    esterle::RemovError,
    serde_json::Error,
    std::io::Error
);

fn default_true() -> bool {
    true
}
fn default_n_max() -> u32 {
    200
}
fn default_extend() -> f64 {
    1e-6
}
fn default_t_grid() -> String {
    "log:1e-6:0.5:200".into()
}
fn default_witness_schedule() -> Vec<f64> {
    vec![5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3]
}
fn default_functions() -> Vec<FnDescriptor> {
    vec![FnDescriptor::Exp]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a run depends on. Unknown fields are rejected so a typo cannot
/// silently fall back to a default.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    /// Determinism marker; runs carry no other source of variation, so this
    /// must be `true`.
    #[serde(default = "default_true")]
    pub random_free: bool,
    pub set: ThinSet,
    /// Singular measure for the inner-function experiments; derived from the
    /// set when absent.
    #[serde(default)]
    pub measure: Option<MeasureDescriptor>,
    #[serde(default)]
    pub rule_params: RuleParams,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Deepest radius the majorant is extended to before dumping.
    #[serde(default = "default_extend")]
    pub extend_to: f64,
    /// Radius grid for the measure curve, `log:MIN:MAX:COUNT` or
    /// `lin:MIN:MAX:COUNT`.
    #[serde(default = "default_t_grid")]
    pub t_grid: String,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub delta_grid: DeltaGrid,
    /// Test functions for the removability lab.
    #[serde(default = "default_functions")]
    pub functions: Vec<FnDescriptor>,
    #[serde(default = "default_eta_schedule")]
    pub etas: Vec<f64>,
    #[serde(default = "default_witness_schedule")]
    pub witness_schedule: Vec<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for the root solves `omega(t_n) = (1 + t_n)^n`.
    pub root_rel_tol: f64,
    /// Multiplicative slack allowed in `u_n^2 delta_n <= 1`.
    pub verify_slack: f64,
    /// Target enclosure width for the removability criterion integrals.
    pub quad_tol: f64,
    /// Reconstruction agreement required to call a function removable.
    pub mismatch_tol: f64,
    /// Mismatch at or above this level counts as bounded away from zero.
    pub mismatch_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_rel_tol: DEFAULT_REL_TOL,
            verify_slack: 1.1,
            quad_tol: 1e-8,
            mismatch_tol: 1e-8,
            mismatch_floor: 1e-4,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!(
                "unsupported config schema {} (this build reads schema {CONFIG_SCHEMA})",
                self.schema
            ));
        }
        if !self.random_free {
            return bad("random_free must be true: runs carry no randomness".into());
        }
        if self.n_max == 0 {
            return bad("n_max must be ≥ 1".into());
        }
        self.set.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(m) = &self.measure {
            m.realize().map_err(|e| CliError::Config(e.to_string()))?;
        }
        let r = &self.rule_params;
        if !(r.t_start.is_finite() && r.t_start > 0.0)
            || !(r.gamma.is_finite() && r.gamma >= 0.0)
            || !(r.delta_min.is_finite() && r.delta_min > 0.0)
            || r.j_max == 0
        {
            return bad(format!("invalid rule_params {r:?}"));
        }
        if !(self.extend_to.is_finite() && self.extend_to > 0.0) {
            return bad(format!("extend_to must be positive, got {}", self.extend_to));
        }
        parse_t_grid(&self.t_grid)?;
        let t = &self.tolerances;
        for (name, v) in [
            ("root_rel_tol", t.root_rel_tol),
            ("quad_tol", t.quad_tol),
            ("mismatch_tol", t.mismatch_tol),
            ("mismatch_floor", t.mismatch_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if !(t.verify_slack.is_finite() && t.verify_slack >= 1.0) {
            return bad(format!("verify_slack must be ≥ 1, got {}", t.verify_slack));
        }
        if self.etas.is_empty() || self.etas.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad(format!("etas must be a nonempty list in (0, 1], got {:?}", self.etas));
        }
        if self.witness_schedule.is_empty()
            || self.witness_schedule.iter().any(|&t| !(t.is_finite() && t > 0.0))
        {
            return bad(format!(
                "witness_schedule must be a nonempty list of positive radii, got {:?}",
                self.witness_schedule
            ));
        }
        if self.functions.is_empty() {
            return bad("functions must be nonempty".into());
        }
        for d in &self.functions {
            TestFn::from_descriptor(d).map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::Config(format!("t grid `{spec}`: {m}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(bad("expected KIND:MIN:MAX:COUNT with KIND one of log, lin"));
    }
    let min: f64 = parts[1].parse().map_err(|_| bad("MIN is not a number"))?;
    let max: f64 = parts[2].parse().map_err(|_| bad("MAX is not a number"))?;
    let count: usize = parts[3].parse().map_err(|_| bad("COUNT is not an integer"))?;
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(bad("need finite MIN < MAX"));
    }
    if !(2..=1_000_000).contains(&count) {
        return Err(bad("COUNT must lie in 2..=1000000"));
    }
    let step = 1.0 / (count - 1) as f64;
    match parts[0] {
        "lin" => Ok((0..count).map(|i| min + (max - min) * (i as f64 * step)).collect()),
        "log" => {
            if min <= 0.0 {
                return Err(bad("log grid needs MIN > 0"));
            }
            let (a, b) = (min.ln(), max.ln());
            Ok((0..count).map(|i| (a + (b - a) * (i as f64 * step)).exp()).collect())
        }
        k => Err(bad(&format!("unknown kind `{k}`"))),
    }
}

fn parse_list_f64(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: `{p}` is not a number")))
        })
        .collect()
}

fn parse_list_u32(s: &str, what: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| CliError::Config(format!("{what}: `{p}` is not a nonnegative integer")))
        })
        .collect()
}

/// The canonical measure of a set: unit atoms on a point family, the snapped
/// depth-8 measure on a Cantor carrier, and a uniform sample otherwise.
pub fn default_measure_for(set: &ThinSet) -> Result<MeasureDescriptor, CliError> {
    let d = match set {
        ThinSet::Atoms { angles, .. } => {
            MeasureDescriptor::Atomic { atoms: angles.iter().map(|&a| (a, 1.0)).collect() }
        }
        ThinSet::SelfSimilarCantor { carrier, ratio, .. } => MeasureDescriptor::Cantor {
            carrier: *carrier,
            ratio: *ratio,
            depth: 8,
            total_mass: 1.0,
        },
        _ => {
            let pts = set.sample_points(32);
            let w = 1.0 / pts.len() as f64;
            MeasureDescriptor::Atomic { atoms: pts.into_iter().map(|a| (a, w)).collect() }
        }
    };
    d.realize().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(d)
}

#[derive(Parser)]
#[command(
    name = "esterle",
    version,
    long_version = long_version(),
    about = "Neighborhood measures of thin circle sets, their majorants, root \
             sequences, inner-function lower bounds, and removability checks"
)]
struct Cli {
    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config JSON; explicit flags override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Thin set descriptor JSON file.
    #[arg(long, value_name = "FILE")]
    set: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Neighborhood measure |E_t| over a grid of radii, as CSV.
    MeasureCurve {
        #[command(flatten)]
        common: Common,
        /// Radius grid, `log:MIN:MAX:COUNT` or `lin:MIN:MAX:COUNT`.
        #[arg(long, value_name = "SPEC")]
        t_grid: Option<String>,
        #[arg(long, value_name = "FILE", default_value = "measure_curve.csv")]
        out: PathBuf,
    },
    /// Build the piecewise majorant omega: knot table, liminf table, dump.
    Omega {
        #[command(flatten)]
        common: Common,
        /// Extend the knot sequence down to this radius.
        #[arg(long, value_name = "T")]
        extend_to: Option<f64>,
        #[arg(long, value_name = "FILE", default_value = "omega_knots.csv")]
        out_knots: PathBuf,
        #[arg(long, value_name = "FILE", default_value = "liminf.csv")]
        out_liminf: PathBuf,
        #[arg(long, value_name = "FILE", default_value = "omega.json")]
        out_json: PathBuf,
    },
    /// Roots of omega(t) = (1+t)^n and the growth sequence u_n.
    #[command(name = "u-seq")]
    USeq {
        #[command(flatten)]
        common: Common,
        /// Load a previously dumped majorant instead of rebuilding.
        #[arg(long, value_name = "FILE")]
        omega: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        n_max: Option<u32>,
        #[arg(long, value_name = "FILE", default_value = "useq.csv")]
        out: PathBuf,
    },
    /// Lower bounds delta_n for a singular measure, with duality diagnostics.
    Delta {
        #[command(flatten)]
        common: Common,
        /// Singular measure descriptor JSON file.
        #[arg(long, value_name = "FILE")]
        measure: Option<PathBuf>,
        /// Comma-separated powers, e.g. `1,5,10,50`.
        #[arg(long, value_name = "LIST")]
        n: Option<String>,
        #[arg(long, value_name = "FILE", default_value = "delta.csv")]
        out: PathBuf,
    },
    /// Check u_n^2 * delta_n <= slack across n = 1..n_max.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        measure: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        n_max: Option<u32>,
        /// Multiplicative slack allowed on the inequality.
        #[arg(long, value_name = "S")]
        slack: Option<f64>,
        #[arg(long, value_name = "FILE", default_value = "verify.csv")]
        out: PathBuf,
        /// Also dump the full report as JSON.
        #[arg(long, value_name = "FILE")]
        out_json: Option<PathBuf>,
    },
    /// Criterion trace, growth check, and Cauchy reconstruction for one
    /// test function.
    Removability {
        #[command(flatten)]
        common: Common,
        /// Test function descriptor, inline JSON, e.g. '{"tag":"pole","p":0.0}'.
        #[arg(long, value_name = "JSON")]
        function: Option<String>,
        /// Load a previously dumped majorant instead of rebuilding.
        #[arg(long, value_name = "FILE")]
        omega: Option<PathBuf>,
        /// Comma-separated fattening radii.
        #[arg(long, value_name = "LIST")]
        etas: Option<String>,
        #[arg(long, value_name = "FILE", default_value = "report.json")]
        out: PathBuf,
    },
    /// Full pipeline; writes every artifact into one directory.
    All {
        /// Experiment config JSON.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Output directory (default: the config's out_dir).
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
}

fn long_version() -> &'static str {
    static S: OnceLock<String> = OnceLock::new();
    S.get_or_init(|| {
        let t = Tolerances::default();
        let r = RuleParams::default();
        format!(
            "{}\nconfig schema {CONFIG_SCHEMA}\ntolerance defaults: root_rel_tol {:e}, \
             verify_slack {}, quad_tol {:e}, mismatch_tol {:e}, mismatch_floor {:e}\n\
             majorant rule defaults: t_start {}, gamma {}, delta_min {:e}, j_max {}",
            env!("CARGO_PKG_VERSION"),
            t.root_rel_tol,
            t.verify_slack,
            t.quad_tol,
            t.mismatch_tol,
            t.mismatch_floor,
            r.t_start,
            r.gamma,
            r.delta_min,
            r.j_max,
        )
    })
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("config error: --threads must be ≥ 1");
            return 2;
        }
        // A pool may already exist when `run` is called twice in-process;
        // results do not depend on the schedule, so keep the old one.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(CliError::Config(m)) => {
            eprintln!("config error: {m}");
            2
        }
    }
}

fn dispatch(cmd: &Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::MeasureCurve { common, t_grid, out } => cmd_measure_curve(common, t_grid, out),
        Cmd::Omega { common, extend_to, out_knots, out_liminf, out_json } => {
            cmd_omega(common, *extend_to, out_knots, out_liminf, out_json)
        }
        Cmd::USeq { common, omega, n_max, out } => cmd_useq(common, omega, *n_max, out),
        Cmd::Delta { common, measure, n, out } => cmd_delta(common, measure, n, out),
        Cmd::Verify { common, measure, n_max, slack, out, out_json } => {
            cmd_verify(common, measure, *n_max, *slack, out, out_json)
        }
        Cmd::Removability { common, function, omega, etas, out } => {
            cmd_removability(common, function, omega, etas, out)
        }
        Cmd::All { config, out_dir } => cmd_all(config, out_dir),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<Option<ExperimentConfig>, CliError> {
    let Some(p) = path else { return Ok(None) };
    let s = fs::read_to_string(p)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&s).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    cfg.validate()?;
    Ok(Some(cfg))
}

fn cfg_field<T>(
    cfg: &Option<ExperimentConfig>,
    f: impl FnOnce(&ExperimentConfig) -> T,
    default: T,
) -> T {
    match cfg {
        Some(c) => f(c),
        None => default,
    }
}

fn resolve_set(
    flag: &Option<PathBuf>,
    cfg: &Option<ExperimentConfig>,
) -> Result<ThinSet, CliError> {
    if let Some(p) = flag {
        let s = fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
        return ThinSet::from_json(&s)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
    }
    match cfg {
        Some(c) => Ok(c.set.clone()),
        None => Err(CliError::Config("no set: pass --set or --config".into())),
    }
}

fn resolve_measure(
    flag: &Option<PathBuf>,
    set_flag: &Option<PathBuf>,
    cfg: &Option<ExperimentConfig>,
) -> Result<MeasureDescriptor, CliError> {
    if let Some(p) = flag {
        let s = fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
        return MeasureDescriptor::from_json(&s)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
    }
    if let Some(c) = cfg {
        if let Some(m) = &c.measure {
            return Ok(m.clone());
        }
    }
    let set = resolve_set(set_flag, cfg).map_err(|_| {
        CliError::Config("no measure: pass --measure, or a set to derive one from".into())
    })?;
    default_measure_for(&set)
}

fn resolve_omega(
    set_flag: &Option<PathBuf>,
    omega_flag: &Option<PathBuf>,
    cfg: &Option<ExperimentConfig>,
) -> Result<MajorantOmega, CliError> {
    if let Some(p) = omega_flag {
        let s = fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
        return MajorantOmega::from_json(&s)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
    }
    let set = resolve_set(set_flag, cfg)?;
    let rule = cfg_field(cfg, |c| c.rule_params, RuleParams::default());
    Ok(MajorantOmega::build(RhoCurve::new(set), rule)?)
}

fn resolve_n_max(flag: Option<u32>, cfg: &Option<ExperimentConfig>) -> Result<u32, CliError> {
    let n = flag.unwrap_or_else(|| cfg_field(cfg, |c| c.n_max, default_n_max()));
    if n == 0 {
        return Err(CliError::Config("n_max must be ≥ 1".into()));
    }
    Ok(n)
}

/// Artifacts are staged in memory and written whole, so a failed run never
/// leaves a truncated file behind.
fn write_artifact(
    path: &Path,
    build: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    build(&mut buf)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, &buf)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json_artifact<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_artifact(path, |buf| {
        serde_json::to_writer_pretty(&mut *buf, value)?;
        buf.push(b'\n');
        Ok(())
    })
}

fn cmd_measure_curve(
    common: &Common,
    t_grid: &Option<String>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let set = resolve_set(&common.set, &cfg)?;
    let spec = t_grid
        .clone()
        .unwrap_or_else(|| cfg_field(&cfg, |c| c.t_grid.clone(), default_t_grid()));
    let ts = parse_t_grid(&spec)?;
    write_artifact(out, |b| Ok(write_measure_curve_csv(&set, &ts, b)?))
}

fn cmd_omega(
    common: &Common,
    extend_to: Option<f64>,
    out_knots: &Path,
    out_liminf: &Path,
    out_json: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let set = resolve_set(&common.set, &cfg)?;
    let rule = cfg_field(&cfg, |c| c.rule_params, RuleParams::default());
    let t = extend_to.unwrap_or_else(|| cfg_field(&cfg, |c| c.extend_to, default_extend()));
    if !(t.is_finite() && t > 0.0) {
        return Err(CliError::Config(format!("extend_to must be positive, got {t}")));
    }
    let mut om = MajorantOmega::build(RhoCurve::new(set), rule)?;
    om.extend_to(t)?;
    om.validate()?;
    write_artifact(out_knots, |b| Ok(om.write_knots_csv(b)?))?;
    write_artifact(out_liminf, |b| Ok(om.write_liminf_csv(b)?))?;
    write_artifact(out_json, |b| {
        b.extend_from_slice(om.to_json().as_bytes());
        b.push(b'\n');
        Ok(())
    })
}

fn cmd_useq(
    common: &Common,
    omega: &Option<PathBuf>,
    n_max: Option<u32>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let mut om = resolve_omega(&common.set, omega, &cfg)?;
    let n_max = resolve_n_max(n_max, &cfg)?;
    let rel = cfg_field(&cfg, |c| c.tolerances.root_rel_tol, DEFAULT_REL_TOL);
    let seq = u_sequence(&mut om, n_max, rel)?;
    write_artifact(out, |b| Ok(seq.write_csv(b)?))
}

fn cmd_delta(
    common: &Common,
    measure: &Option<PathBuf>,
    n: &Option<String>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let descriptor = resolve_measure(measure, &common.set, &cfg)?;
    let ns = match n {
        Some(s) => parse_list_u32(s, "--n")?,
        None => vec![1, 2, 5, 10, 20, 50, 100, 200],
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Config("--n needs a nonempty list of powers ≥ 1".into()));
    }
    let grid = cfg_field(&cfg, |c| c.delta_grid.clone(), DeltaGrid::default());
    let ie = InnerEval::new(descriptor.realize().map_err(|e| CliError::Config(e.to_string()))?);
    let reports = delta_batch(&ie, &ns, &grid)?;
    write_artifact(out, |b| {
        writeln!(
            b,
            "n,log_delta_n,argmin_r,argmin_theta,log_delta_grid,log_delta_exterior,\
             duality_gap,crossing_warn"
        )?;
        for r in &reports {
            writeln!(
                b,
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.log_delta,
                r.argmin_r,
                r.argmin_theta,
                r.log_delta_grid,
                r.log_delta_exterior,
                r.duality_gap,
                u8::from(r.crossing_warn)
            )?;
        }
        Ok(())
    })
}

fn cmd_verify(
    common: &Common,
    measure: &Option<PathBuf>,
    n_max: Option<u32>,
    slack: Option<f64>,
    out: &Path,
    out_json: &Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let set = resolve_set(&common.set, &cfg)?;
    let descriptor = resolve_measure(measure, &common.set, &cfg)?;
    let n_max = resolve_n_max(n_max, &cfg)?;
    let slack = slack.unwrap_or_else(|| cfg_field(&cfg, |c| c.tolerances.verify_slack, 1.1));
    if !(slack.is_finite() && slack >= 1.0) {
        return Err(CliError::Config(format!("slack must be ≥ 1, got {slack}")));
    }
    let rule = cfg_field(&cfg, |c| c.rule_params, RuleParams::default());
    let rel = cfg_field(&cfg, |c| c.tolerances.root_rel_tol, DEFAULT_REL_TOL);
    let grid = cfg_field(&cfg, |c| c.delta_grid.clone(), DeltaGrid::default());
    let mut om = MajorantOmega::build(RhoCurve::new(set), rule)?;
    let seq = u_sequence(&mut om, n_max, rel)?;
    let ie = InnerEval::new(descriptor.realize().map_err(|e| CliError::Config(e.to_string()))?);
    let report = verify_theorem(&ie, &seq, &grid, slack)?;
    write_artifact(out, |b| Ok(write_verify_csv(&report, b)?))?;
    if let Some(p) = out_json {
        write_json_artifact(p, &report)?;
    }
    println!(
        "witnesses: {} strict, {} within slack; improvements: {}",
        report.witnesses_strict.len(),
        report.witnesses_slack.len(),
        report.improvements
    );
    if report.succeeded {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "verification failed: no strict witness or fewer than 3 improvements; see {}",
            out.display()
        )))
    }
}

fn fn_tag(d: &FnDescriptor) -> &'static str {
    match d {
        FnDescriptor::Exp => "exp",
        FnDescriptor::Polynomial { .. } => "polynomial",
        FnDescriptor::Pole { .. } => "pole",
        FnDescriptor::ReflectedInner { .. } => "reflected_inner",
        FnDescriptor::Jump { .. } => "jump",
    }
}

fn removability_params(cfg: &Option<ExperimentConfig>) -> RemovabilityParams {
    let t = cfg_field(cfg, |c| c.tolerances, Tolerances::default());
    RemovabilityParams {
        mismatch_tol: t.mismatch_tol,
        mismatch_floor: t.mismatch_floor,
        quad: QuadParams { tol: t.quad_tol, ..QuadParams::default() },
        ..RemovabilityParams::default()
    }
}

fn cmd_removability(
    common: &Common,
    function: &Option<String>,
    omega: &Option<PathBuf>,
    etas: &Option<String>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(&common.config)?;
    let set = resolve_set(&common.set, &cfg)?;
    let descriptor = match function {
        Some(s) => FnDescriptor::from_json(s).map_err(|e| CliError::Config(e.to_string()))?,
        None => {
            let fns = cfg_field(&cfg, |c| c.functions.clone(), Vec::new());
            match fns.as_slice() {
                [one] => one.clone(),
                _ => {
                    return Err(CliError::Config(
                        "pass --function (the config does not name exactly one)".into(),
                    ))
                }
            }
        }
    };
    let f = TestFn::from_descriptor(&descriptor).map_err(|e| CliError::Config(e.to_string()))?;
    let etas = match etas {
        Some(s) => parse_list_f64(s, "--etas")?,
        None => cfg_field(&cfg, |c| c.etas.clone(), default_eta_schedule()),
    };
    if etas.is_empty() || etas.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(CliError::Config(format!("etas must be nonempty, each in (0, 1]: {etas:?}")));
    }
    let contour = Contour::default_for(&set)?;
    let probes = contour.default_probes(8);
    let mut om = resolve_omega(&common.set, omega, &cfg)?;
    let params = removability_params(&cfg);
    let report =
        removability_test(&f, &descriptor, &set, &contour, &mut om, &etas, &probes, &params)?;
    write_json_artifact(out, &report)?;
    println!("verdict: {:?}", report.verdict);
    match report.verdict {
        Verdict::Inconclusive => Err(CliError::Failure(format!(
            "removability inconclusive; see {}",
            out.display()
        ))),
        _ => Ok(()),
    }
}

/// One run per output directory: the lock file is created exclusively and
/// removed when the run ends, panics included.
struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let p = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&p) {
            Ok(mut f) => {
                let _ = writeln!(f, "run in progress");
                Ok(LockGuard(p))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Config(format!(
                    "{} is locked by another run (remove {} if that run died hard)",
                    dir.display(),
                    p.display()
                )))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

#[derive(Serialize)]
struct OmegaSummary {
    knots: usize,
    deepest_t: f64,
    valid: bool,
}

#[derive(Serialize)]
struct UseqSummary {
    n_max: u32,
    max_log_u: f64,
    max_identity_residual: f64,
}

#[derive(Serialize)]
struct VerifySummary {
    succeeded: bool,
    strict_witnesses: usize,
    improvements: u32,
    min_log_u_delta: f64,
}

#[derive(Serialize)]
struct WitnessSummary {
    scheduled: usize,
    found: usize,
}

#[derive(Serialize)]
struct RemovSummary {
    file: String,
    verdict: Verdict,
    max_mismatch: f64,
    conclusive: bool,
}

/// The config is echoed as read, so two runs of one config agree byte for
/// byte even when `--out-dir` redirects them to different places.
#[derive(Serialize)]
struct Summary {
    schema: u32,
    config: ExperimentConfig,
    artifacts: Vec<String>,
    omega: OmegaSummary,
    useq: UseqSummary,
    verify: VerifySummary,
    witnesses: WitnessSummary,
    removability: Vec<RemovSummary>,
    passed: bool,
}

fn cmd_all(config: &Path, out_dir: &Option<PathBuf>) -> Result<(), CliError> {
    let s = fs::read_to_string(config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&s)
        .map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    cfg.validate()?;
    let dir = out_dir.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let _lock = LockGuard::acquire(&dir)?;
    run_all(&cfg, &dir)
}

fn run_all(cfg: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
    let tol = cfg.tolerances;
    let set = cfg.set.clone();
    let mut artifacts: Vec<String> = Vec::new();
    let mut art = |name: &str| -> PathBuf {
        artifacts.push(name.to_string());
        dir.join(name)
    };

    let ts = parse_t_grid(&cfg.t_grid)?;
    write_artifact(&art("measure_curve.csv"), |b| Ok(write_measure_curve_csv(&set, &ts, b)?))?;

    let mut om = MajorantOmega::build(RhoCurve::new(set.clone()), cfg.rule_params)?;
    om.extend_to(cfg.extend_to)?;
    let omega_valid = om.validate().is_ok();
    write_artifact(&art("omega_knots.csv"), |b| Ok(om.write_knots_csv(b)?))?;
    write_artifact(&art("liminf.csv"), |b| Ok(om.write_liminf_csv(b)?))?;
    write_artifact(&art("omega.json"), |b| {
        b.extend_from_slice(om.to_json().as_bytes());
        b.push(b'\n');
        Ok(())
    })?;
    let omega_summary =
        OmegaSummary { knots: om.knots().len(), deepest_t: om.deepest_t(), valid: omega_valid };

    let seq = u_sequence(&mut om, cfg.n_max, tol.root_rel_tol)?;
    write_artifact(&art("useq.csv"), |b| Ok(seq.write_csv(b)?))?;
    let useq_summary = UseqSummary {
        n_max: cfg.n_max,
        max_log_u: seq.max_log_u(),
        max_identity_residual: seq.identity_residual.iter().copied().fold(0.0, f64::max),
    };

    let descriptor = match &cfg.measure {
        Some(m) => m.clone(),
        None => default_measure_for(&set)?,
    };
    let ie = InnerEval::new(descriptor.realize().map_err(|e| CliError::Config(e.to_string()))?);
    let verify = verify_theorem(&ie, &seq, &cfg.delta_grid, tol.verify_slack)?;
    write_artifact(&art("verify.csv"), |b| Ok(write_verify_csv(&verify, b)?))?;
    write_json_artifact(&art("verify.json"), &verify)?;
    let verify_summary = VerifySummary {
        succeeded: verify.succeeded,
        strict_witnesses: verify.witnesses_strict.len(),
        improvements: verify.improvements,
        min_log_u_delta: verify.min_log_u_delta,
    };

    let wit = witness_points(&ie, &mut om, &cfg.witness_schedule)?;
    write_artifact(&art("witnesses.csv"), |b| {
        writeln!(b, "t,found,theta_angle,log_abs_theta,log_omega")?;
        for w in &wit {
            writeln!(
                b,
                "{},{},{},{},{}",
                w.t,
                u8::from(w.found),
                w.theta_angle,
                w.log_abs_theta,
                w.log_omega
            )?;
        }
        Ok(())
    })?;
    let witness_summary =
        WitnessSummary { scheduled: wit.len(), found: wit.iter().filter(|w| w.found).count() };

    let contour = Contour::default_for(&set)?;
    let probes = contour.default_probes(8);
    let params = removability_params(&Some(cfg.clone()));
    let mut removability = Vec::new();
    for (i, d) in cfg.functions.iter().enumerate() {
        let f = TestFn::from_descriptor(d).map_err(|e| CliError::Config(e.to_string()))?;
        let report =
            removability_test(&f, d, &set, &contour, &mut om, &cfg.etas, &probes, &params)?;
        let name = format!("removability_{i}_{}.json", fn_tag(d));
        write_json_artifact(&art(&name), &report)?;
        removability.push(RemovSummary {
            file: name,
            verdict: report.verdict,
            max_mismatch: report.max_mismatch,
            conclusive: report.verdict != Verdict::Inconclusive,
        });
    }

    let passed = omega_valid
        && verify.succeeded
        && witness_summary.found == witness_summary.scheduled
        && removability.iter().all(|r| r.conclusive);
    let summary = Summary {
        schema: CONFIG_SCHEMA,
        config: cfg.clone(),
        artifacts: {
            let mut a = artifacts.clone();
            a.push("summary.json".into());
            a
        },
        omega: omega_summary,
        useq: useq_summary,
        verify: verify_summary,
        witnesses: witness_summary,
        removability,
        passed,
    };
    write_json_artifact(&dir.join("summary.json"), &summary)?;
    if passed {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "pipeline checks failed; see {}",
            dir.join("summary.json").display()
        )))
    }
}
