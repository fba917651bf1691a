//! Command-line front end: argument parsing, run configuration, report files
//! and exit statuses (0 success, 1 violations or non-convergence, 2 bad
//! configuration).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::Signature;
use crate::report::{sort_rows, write_csv, Summary, TrialRow};
use crate::solver::io::{with_suffix, write_solution, ConvergenceLog, ProblemFile};
use crate::solver::{solve_continuation, sphere_barrier_check, sphere_solve, RadialRhs, SolveOptions};
use crate::sweep::{self, SweepConfig, SweepOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Verification sweeps and solvers for sigma_{n-1} curvature problems.
#[derive(Debug, Parser)]
#[command(name = "curvest", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Symmetric-function identities and derivative formulas on random vectors.
    VerifyIdentities(SweepArgs),
    /// Threshold K* of the third-derivative form on Gamma_{n-1} samples.
    VerifyProp21(SweepArgs),
    /// Closed-form minors/cofactors and PSD checks of the Hadamard matrix.
    VerifyDeterminants(SweepArgs),
    /// Smallest-curvature bound, concavity, divided-difference and combination inequalities.
    VerifyLemmas(SweepArgs),
    /// The sigma_2 counterexample in four dimensions.
    Counterexample(SweepArgs),
    /// Principal curvatures of a graph jet, or an umbilic sweep.
    Curvature(CurvatureArgs),
    /// Dirichlet problem on a box from a JSON problem file.
    Solve(SolveArgs),
    /// Radial barrier conditions and sphere radius.
    Sphere(SphereArgs),
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Seed of every random stream (positive).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output prefix for `<out>.csv` and `<out>.json`.
    #[arg(long, default_value = "curvest_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trials per dimension.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Comma-separated dimensions (command-specific default).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Regime threshold kappa_i >= delta kappa_1.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Diagonal slack of the form.
    #[arg(long)]
    pub eps: Option<f64>,
    /// eps_T of the divided-difference inequality.
    #[arg(long = "eps-t")]
    pub eps_t: Option<f64>,
    /// delta of the divided-difference inequality.
    #[arg(long = "delta-small")]
    pub delta_small: Option<f64>,
    /// delta of the second concavity inequality.
    #[arg(long = "delta-guan")]
    pub delta_guan: Option<f64>,
    /// Largest K scanned.
    #[arg(long = "k-max")]
    pub k_max: Option<f64>,
    /// Smallest kappa_1 counted by the divided-difference sweep.
    #[arg(long = "kappa1-min")]
    pub kappa1_min: Option<f64>,
    /// Fraction of samples pushed to the cone boundary.
    #[arg(long = "near-fraction")]
    pub near_fraction: Option<f64>,
    /// Family parameter of the counterexample.
    #[arg(long)]
    pub t: Option<f64>,
    /// Constant K of the counterexample form.
    #[arg(long = "K")]
    pub big_k: Option<f64>,
    /// Extra `key=value` parameters.
    #[arg(long = "param", value_parser = parse_key_value)]
    pub extra: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignatureArg {
    Euclidean,
    Minkowski,
}

impl From<SignatureArg> for Signature {
    fn from(s: SignatureArg) -> Self {
        match s {
            SignatureArg::Euclidean => Signature::Euclidean,
            SignatureArg::Minkowski => Signature::Minkowski,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ambient geometry.
    #[arg(long, value_enum, default_value = "minkowski")]
    pub signature: SignatureArg,
    /// Gradient (comma-separated); with --d2u evaluates one jet.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub du: Option<Vec<f64>>,
    /// Row-major Hessian entries.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub d2u: Option<Vec<f64>>,
    /// Points per dimension of the umbilic sweep.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Comma-separated dimensions of the umbilic sweep.
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// JSON problem file.
    #[arg(long)]
    pub problem: PathBuf,
    /// Continuation steps from the seed problem to the target.
    #[arg(long = "t-steps", default_value_t = 4)]
    pub t_steps: usize,
    /// Newton tolerance on the residual max-norm.
    #[arg(long, default_value_t = crate::solver::TOL_NEWTON)]
    pub tol: f64,
    /// Newton iterations allowed per continuation step.
    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SphereArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ambient dimension n (one value).
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub dims: Vec<usize>,
    /// Order k (default n - 1).
    #[arg(long)]
    pub k: Option<usize>,
    /// f(rho) = coef * rho^exponent (defaults n and -n).
    #[arg(long, allow_hyphen_values = true)]
    pub coef: Option<f64>,
    /// Exponent of the radial right-hand side.
    #[arg(long, allow_hyphen_values = true)]
    pub exponent: Option<f64>,
    /// Inner barrier radius.
    #[arg(long, default_value_t = 0.5)]
    pub r1: f64,
    /// Outer barrier radius.
    #[arg(long, default_value_t = 2.0)]
    pub r2: f64,
}

fn parse_key_value(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Which run to perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyIdentities,
    VerifyProp21,
    VerifyDeterminants,
    VerifyLemmas,
    Counterexample,
    Curvature,
    Solve,
    Sphere,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::VerifyProp21 => "verify-prop21",
            Command::VerifyDeterminants => "verify-determinants",
            Command::VerifyLemmas => "verify-lemmas",
            Command::Counterexample => "counterexample",
            Command::Curvature => "curvature",
            Command::Solve => "solve",
            Command::Sphere => "sphere",
        }
    }

    fn default_dims(self) -> Vec<usize> {
        match self {
            Command::VerifyIdentities => (3..=8).collect(),
            Command::VerifyProp21 => vec![4, 5],
            Command::VerifyDeterminants => (3..=7).collect(),
            Command::VerifyLemmas => vec![4],
            Command::Counterexample => vec![4],
            Command::Curvature | Command::Sphere => vec![3],
            Command::Solve => vec![],
        }
    }

    fn min_dim(self) -> usize {
        match self {
            Command::Curvature | Command::Solve | Command::Sphere => 2,
            _ => 3,
        }
    }
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub samples: usize,
    pub dims: Vec<usize>,
    /// Numeric parameters (delta, eps, eps_T, K_max, tolerances, ...).
    pub params: BTreeMap<String, f64>,
    pub out: PathBuf,
    pub problem: Option<PathBuf>,
    pub signature: Signature,
    pub du: Option<Vec<f64>>,
    pub d2u: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            seed: 1,
            samples: 1000,
            dims: command.default_dims(),
            params: BTreeMap::new(),
            out: out.into(),
            problem: None,
            signature: Signature::Minkowski,
            du: None,
            d2u: None,
        }
    }

    /// Checks the invariants of the configuration.
    pub fn validate(&self) -> Result<()> {
        if self.seed == 0 {
            return Err(Error::InvalidInput("seed must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be positive".into()));
        }
        let min = self.command.min_dim();
        if let Some(&n) = self.dims.iter().find(|&&n| n < min) {
            return Err(Error::InvalidInput(format!("{}: dimension {n} is below {min}", self.command.name())));
        }
        if self.command != Command::Solve && self.dims.is_empty() {
            return Err(Error::InvalidInput("no dimensions given".into()));
        }
        if self.command == Command::Solve && self.problem.is_none() {
            return Err(Error::InvalidInput("solve needs --problem".into()));
        }
        if self.command == Command::Sphere && self.dims.len() != 1 {
            return Err(Error::InvalidInput("sphere takes exactly one dimension".into()));
        }
        if self.command == Command::Curvature && self.du.is_some() != self.d2u.is_some() {
            return Err(Error::InvalidInput("--du and --d2u go together".into()));
        }
        if let Some((k, v)) = self.params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("parameter {k} = {v} is not finite")));
        }
        const POSITIVE: [&str; 12] = [
            "delta",
            "eps",
            "eps_T",
            "delta_small",
            "delta_guan",
            "K_max",
            "kappa1_min",
            "t",
            "K",
            "tol",
            "t_steps",
            "max_iter",
        ];
        for key in POSITIVE {
            if let Some(&v) = self.params.get(key) {
                if v <= 0.0 {
                    return Err(Error::InvalidInput(format!("parameter {key} must be positive, got {v}")));
                }
            }
        }
        if let Some(&v) = self.params.get("near_fraction") {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("near_fraction must lie in [0, 1], got {v}")));
            }
        }
        if self.command == Command::Sphere {
            let n = self.dims[0];
            let k = self.params.get("k").copied().unwrap_or((n - 1) as f64);
            if k < 1.0 || k > n as f64 || k.fract() != 0.0 {
                return Err(Error::InvalidInput(format!("sphere needs an integer 1 <= k <= n, got k = {k}")));
            }
            let (r1, r2) =
                (self.params.get("r1").copied().unwrap_or(0.5), self.params.get("r2").copied().unwrap_or(2.0));
            if !(r1 > 0.0 && r1 < r2) {
                return Err(Error::InvalidInput(format!("need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
            }
        }
        Ok(())
    }

    /// [`RunConfig::validate`] plus loading the problem file of `solve`.
    /// Failures here are configuration errors (exit status 2).
    pub fn preflight(&self) -> Result<()> {
        self.validate()?;
        if let (Command::Solve, Some(path)) = (self.command, &self.problem) {
            ProblemFile::load(path)?.into_problem()?;
        }
        Ok(())
    }

    fn sweep_config(&self) -> SweepConfig {
        SweepConfig { seed: self.seed, samples: self.samples, dims: self.dims.clone(), params: self.params.clone() }
    }
}

fn sweep_from_args(command: Command, a: SweepArgs) -> RunConfig {
    let mut c = RunConfig::new(command, a.common.out);
    c.seed = a.common.seed;
    c.samples = a.samples;
    if let Some(d) = a.dims {
        c.dims = d;
    }
    let named = [
        ("delta", a.delta),
        ("eps", a.eps),
        ("eps_T", a.eps_t),
        ("delta_small", a.delta_small),
        ("delta_guan", a.delta_guan),
        ("K_max", a.k_max),
        ("kappa1_min", a.kappa1_min),
        ("near_fraction", a.near_fraction),
        ("t", a.t),
        ("K", a.big_k),
    ];
    for (key, v) in named {
        if let Some(v) = v {
            c.params.insert(key.to_string(), v);
        }
    }
    c.params.extend(a.extra);
    c
}

/// Converts parsed arguments into a run configuration.
pub fn config_from_cli(cli: Cli) -> RunConfig {
    match cli.command {
        CommandArgs::VerifyIdentities(a) => sweep_from_args(Command::VerifyIdentities, a),
        CommandArgs::VerifyProp21(a) => sweep_from_args(Command::VerifyProp21, a),
        CommandArgs::VerifyDeterminants(a) => sweep_from_args(Command::VerifyDeterminants, a),
        CommandArgs::VerifyLemmas(a) => sweep_from_args(Command::VerifyLemmas, a),
        CommandArgs::Counterexample(a) => sweep_from_args(Command::Counterexample, a),
        CommandArgs::Curvature(a) => {
            let mut c = RunConfig::new(Command::Curvature, a.common.out);
            c.seed = a.common.seed;
            c.samples = a.samples;
            c.dims = a.dims;
            c.signature = a.signature.into();
            c.du = a.du;
            c.d2u = a.d2u;
            c
        }
        CommandArgs::Solve(a) => {
            let mut c = RunConfig::new(Command::Solve, a.common.out);
            c.seed = a.common.seed;
            c.samples = 1;
            c.problem = Some(a.problem);
            c.params.insert("t_steps".into(), a.t_steps as f64);
            c.params.insert("tol".into(), a.tol);
            c.params.insert("max_iter".into(), a.max_iter as f64);
            c
        }
        CommandArgs::Sphere(a) => {
            let mut c = RunConfig::new(Command::Sphere, a.common.out);
            c.seed = a.common.seed;
            c.samples = 1;
            c.dims = a.dims;
            let optional = [("k", a.k.map(|k| k as f64)), ("coef", a.coef), ("exponent", a.exponent)];
            for (key, v) in optional {
                if let Some(v) = v {
                    c.params.insert(key.to_string(), v);
                }
            }
            c.params.insert("r1".into(), a.r1);
            c.params.insert("r2".into(), a.r2);
            c
        }
    }
}

/// Exit status and summary of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Summary,
}

fn sphere_rows(cfg: &RunConfig) -> Result<SweepOutput> {
    let n = cfg.dims[0];
    let k = cfg.params.get("k").map(|&k| k as usize).unwrap_or(n - 1);
    let f = RadialRhs::Power {
        coef: cfg.params.get("coef").copied().unwrap_or(n as f64),
        exponent: cfg.params.get("exponent").copied().unwrap_or(-(n as f64)),
    };
    let (r1, r2) = (cfg.params["r1"], cfg.params["r2"]);
    let barrier = sphere_barrier_check(&f, r1, r2, n, k)?;
    let dummy = vec![1.0; n];
    let mut rows = vec![
        TrialRow::check(0, "barrier_radii", &dummy, f.eval(r1), f.eval(r2), barrier.cond1),
        TrialRow::check(1, "barrier_monotone", &dummy, barrier.max_slope, 0.0, barrier.cond2),
    ];
    let mut out = SweepOutput::default();
    match sphere_solve(&f, r1, r2, n, k) {
        Ok(s) => {
            rows.push(
                TrialRow::check(2, "sphere_radius", &vec![1.0 / s.r; n], s.r, s.residual, true)
                    .param("degenerate", s.degenerate as u8 as f64),
            );
            out.thresholds.insert("radius".into(), json!(s.r));
            out.thresholds.insert("degenerate".into(), json!(s.degenerate));
        }
        Err(Error::NoRoot { .. }) => {
            rows.push(TrialRow::check(2, "sphere_radius", &dummy, f64::NAN, f64::NAN, false));
            out.thresholds.insert("radius".into(), json!("no root"));
        }
        Err(e) => return Err(e),
    }
    out.rows = rows;
    Ok(out)
}

fn solve_rows(cfg: &RunConfig) -> Result<SweepOutput> {
    let path = cfg.problem.as_ref().expect("validated");
    let problem = ProblemFile::load(path)?.into_problem()?;
    let opts = SolveOptions {
        t_steps: cfg.params["t_steps"] as usize,
        tol: cfg.params["tol"],
        max_iter: cfg.params["max_iter"] as usize,
        ..Default::default()
    };
    let n = problem.n();
    let mut out = SweepOutput::default();
    out.thresholds.insert("n".into(), json!(n));
    match solve_continuation(&problem, &opts) {
        Ok(sol) => {
            let log = ConvergenceLog::from_outcome(&sol);
            write_solution(&cfg.out, &problem.grid, &sol.state.u, &log)?;
            for (j, e) in sol.log.iter().enumerate() {
                out.rows.push(
                    TrialRow::observation(j as u64, "newton", &[], e.residual, opts.tol, e.residual <= opts.tol)
                        .with_n(n)
                        .param("t", e.t)
                        .param("iteration", e.iteration as f64)
                        .param("damping", e.damping)
                        .param("min_margin", e.min_margin),
                );
            }
            let ok = sol.state.residual_norm <= opts.tol && sol.state.cone_ok;
            out.rows.push(
                TrialRow::check(sol.log.len() as u64, "final_residual", &[], sol.state.residual_norm, opts.tol, ok)
                    .with_n(n)
                    .param("min_margin", sol.state.min_margin),
            );
            out.thresholds.insert("final_residual".into(), json!(sol.state.residual_norm));
            out.thresholds.insert("seed_alpha".into(), json!(sol.seed_alpha));
            out.thresholds.insert("grid".into(), json!(with_suffix(&cfg.out, ".grid").display().to_string()));
        }
        Err(
            e @ (Error::LineSearchFailure { .. }
            | Error::SingularJacobian { .. }
            | Error::NotConverged { .. }
            | Error::NonPositiveRhs { .. }
            | Error::NotSpacelike { .. }),
        ) => {
            fs::write(with_suffix(&cfg.out, ".log.json"), serde_json::to_string_pretty(&ConvergenceLog::failure(&e))?)?;
            out.rows.push(TrialRow::check(0, "final_residual", &[], f64::NAN, opts.tol, false).with_n(n));
            out.thresholds.insert("error".into(), json!(e.to_string()));
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn execute(cfg: &RunConfig) -> Result<SweepOutput> {
    let sc = cfg.sweep_config();
    match cfg.command {
        Command::VerifyIdentities => sweep::identities(&sc),
        Command::VerifyProp21 => sweep::prop21(&sc),
        Command::VerifyDeterminants => {
            let mut out = sweep::determinants(&sc)?;
            let schur = sweep::schur(&sc)?;
            let offset = out.rows.iter().map(|r| r.trial + 1).max().unwrap_or(0);
            out.rows.extend(schur.rows.into_iter().map(|mut r| {
                r.trial += offset;
                r
            }));
            out.thresholds.extend(schur.thresholds);
            Ok(out)
        }
        Command::VerifyLemmas => sweep::lemmas(&sc),
        Command::Counterexample => sweep::counterexample(&sc),
        Command::Curvature => match (&cfg.du, &cfg.d2u) {
            (Some(du), Some(d2u)) => sweep::curvature_point(du, d2u, cfg.signature),
            _ => sweep::curvature_sweep(&sc, cfg.signature),
        },
        Command::Solve => solve_rows(cfg),
        Command::Sphere => sphere_rows(cfg),
    }
}

/// Runs a validated configuration, writing `<out>.csv` and `<out>.json`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = execute(cfg)?;
    sort_rows(&mut out.rows);
    let csv_path = with_suffix(&cfg.out, ".csv");
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_csv(&out.rows, fs::File::create(&csv_path)?)?;
    let mut summary = Summary::new(cfg.command.name(), cfg.seed, cfg.samples, &cfg.dims, &out.rows);
    summary.thresholds = out.thresholds;
    summary.params = cfg.params.clone();
    summary.csv = Some(csv_path.display().to_string());
    summary.runtime_ms = start.elapsed().as_millis() as u64;
    fs::write(with_suffix(&cfg.out, ".json"), serde_json::to_string_pretty(&summary)?)?;
    let exit_code = if summary.violation_count == 0 { EXIT_OK } else { EXIT_FAIL };
    Ok(RunOutcome { exit_code, summary })
}

/// Parses arguments, runs, prints a one-line result and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = config_from_cli(cli);
    if let Err(e) = cfg.preflight() {
        eprintln!("configuration error: {e}");
        return EXIT_CONFIG;
    }
    match run(&cfg) {
        Ok(o) => {
            let s = &o.summary;
            println!(
                "{}: {} rows, {} violations -> {}",
                s.command,
                s.rows,
                s.violation_count,
                s.csv.as_deref().unwrap_or("")
            );
            for v in s.violations.iter().take(5) {
                println!("  violation: trial {} ({}) at csv line {}", v.trial, v.check, v.csv_line);
            }
            o.exit_code
        }
        Err(e @ Error::Io(_)) => {
            eprintln!("cannot write output: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}

/// Reads a summary written by [`run`].
pub fn read_summary(path: &Path) -> Result<Summary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
