//! Command-line front end: argument and config-file parsing, task dispatch, CSV profiles
//! and JSON summaries.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numerical or I/O failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::ball_shooting::{first_eigenvalue, solve_ball, BallConfig};
use crate::closed_forms::select;
use crate::error::Error;
use crate::exponents::{derive, Params};
use crate::ground_state::{solve, GroundStateConfig};
use crate::profile::RadialProfile;
use crate::verify::{
    check_params, compare_to_closed_form, default_suite, fit_power_slope, params_context, CheckReport, End, Suite,
    NONEXISTENCE_NOTE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const CSV_HEADER: &str = "r,u,du_dr,flux,w";

#[derive(Debug, Parser)]
#[command(name = "hardy-radial", version, about = "Radial solutions of critical p-Laplacian equations with a Hardy potential")]
struct Cli {
    #[command(subcommand)]
    task: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print gamma1, gamma2 and the derived constants.
    Exponents(CommonArgs),
    /// Sample the explicit family (p = 2 or mu = 0).
    ClosedForm(CommonArgs),
    /// Compute the ground state on [r-min, r-max] (lambda = 0).
    GroundState(CommonArgs),
    /// Solve the Dirichlet problem on the unit ball by shooting.
    Ball(CommonArgs),
    /// First eigenvalue of the Hardy operator on the unit ball.
    Eigen(CommonArgs),
    /// Run the invariant checks; without --N and --p the default suite is run.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Check a CSV profile against the closed form (or the exponents) instead of solving.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Evaluate a task over the Cartesian product of parameter axes.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter axis, e.g. `mu=0,0.25,0.5` (keys N, p, mu, s, lambda, lambda-frac). Repeatable.
        #[arg(long = "axis", value_name = "KEY=V1,V2,..")]
        axes: Vec<String>,
        /// Task evaluated at every point.
        #[arg(long = "task", value_enum, default_value = "ground-state")]
        sweep_task: SweepTask,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Dimension N (required unless given in --config).
    #[arg(long = "N")]
    n: Option<u32>,
    /// Exponent p with 1 < p < N (required unless given in --config).
    #[arg(long)]
    p: Option<f64>,
    /// Hardy coefficient, mu < ((N-p)/p)^p [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Weight exponent, 0 <= s < p [default: 0].
    #[arg(long)]
    s: Option<f64>,
    /// Linear coefficient [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Set lambda to this multiple of the first eigenvalue.
    #[arg(long = "lambda-frac", allow_hyphen_values = true)]
    lambda_frac: Option<f64>,
    /// Smallest sampled radius; the start radius of the ball problem [default: 1e-6].
    #[arg(long = "r-min")]
    r_min: Option<f64>,
    /// Largest sampled radius of the ground state [default: 1e6].
    #[arg(long = "r-max")]
    r_max: Option<f64>,
    /// Number of log-spaced samples [default: 2001].
    #[arg(long)]
    samples: Option<usize>,
    /// Quadrature tolerance [default: 1e-12].
    #[arg(long = "quad-tol")]
    quad_tol: Option<f64>,
    /// ODE tolerance [default: 1e-12].
    #[arg(long = "ode-tol")]
    ode_tol: Option<f64>,
    /// Root-finding tolerance [default: 1e-13].
    #[arg(long = "root-tol")]
    root_tol: Option<f64>,
    /// Output prefix: writes PREFIX.csv and PREFIX.json (summary on stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key = value` lines using the flag names; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Add runtime_seconds to summaries (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTask {
    Exponents,
    ClosedForm,
    GroundState,
    Ball,
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Exponents,
    ClosedForm,
    GroundState,
    Ball,
    Eigen,
    Verify,
    Sweep(SweepTask),
}

impl From<SweepTask> for Task {
    fn from(t: SweepTask) -> Self {
        match t {
            SweepTask::Exponents => Task::Exponents,
            SweepTask::ClosedForm => Task::ClosedForm,
            SweepTask::GroundState => Task::GroundState,
            SweepTask::Ball => Task::Ball,
            SweepTask::Eigen => Task::Eigen,
        }
    }
}

/// Raw parameter values before validation; sweep axes override them point by point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamValues {
    pub n: Option<u32>,
    pub p: Option<f64>,
    pub mu: Option<f64>,
    pub s: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_frac: Option<f64>,
}

impl ParamValues {
    fn is_empty(&self) -> bool {
        *self == ParamValues::default()
    }

    fn set(&mut self, key: &str, v: f64) -> Result<(), String> {
        match key {
            "N" => {
                if !(v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64) {
                    return Err(format!("invalid value for --N: {v}"));
                }
                self.n = Some(v as u32)
            }
            "p" => self.p = Some(v),
            "mu" => self.mu = Some(v),
            "s" => self.s = Some(v),
            "lambda" => self.lambda = Some(v),
            "lambda-frac" => self.lambda_frac = Some(v),
            _ => return Err(format!("unknown parameter `{key}`")),
        }
        Ok(())
    }

    /// Validated parameters; `lambda-frac` is resolved later, since it needs the eigenvalue.
    fn params(&self) -> Result<Params, String> {
        let n = self.n.ok_or("missing required flag --N")?;
        let p = self.p.ok_or("missing required flag --p")?;
        if self.lambda.is_some() && self.lambda_frac.is_some() {
            return Err("--lambda and --lambda-frac are mutually exclusive".into());
        }
        Params::new(n, p, self.mu.unwrap_or(0.0), self.s.unwrap_or(0.0), self.lambda.unwrap_or(0.0))
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub r_min: f64,
    pub r_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub quad: f64,
    pub ode: f64,
    pub root: f64,
}

/// Everything a run needs, after merging the config file with the flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub values: ParamValues,
    pub grid: Grid,
    pub tol: Tolerances,
    pub out: Option<PathBuf>,
    pub sweep: Vec<Axis>,
    pub profile: Option<PathBuf>,
    pub timing: bool,
}

impl RunConfig {
    /// Validated parameters with any `lambda-frac` resolved.
    pub fn params(&self) -> Result<Params, RunError> {
        resolve_params(&self.values, self.tol.root)
    }

    pub fn ground_config(&self) -> GroundStateConfig {
        GroundStateConfig {
            r_min: self.grid.r_min,
            r_max: self.grid.r_max,
            samples: self.grid.samples,
            quad_tol: self.tol.quad,
            ..Default::default()
        }
    }

    pub fn ball_config(&self) -> BallConfig {
        BallConfig {
            r0: self.grid.r_min,
            ode_tol: self.tol.ode,
            root_tol: self.tol.root,
            samples: self.grid.samples,
            quad_tol: self.tol.quad,
            ..Default::default()
        }
    }
}

/// Failure of a run, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Usage(String),
    Numeric(String),
    Verification(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Numeric(_) => EXIT_NUMERIC,
            RunError::Verification(_) => EXIT_VERIFY,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Usage(m) | RunError::Numeric(m) | RunError::Verification(m) => m,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(m) => RunError::Usage(m),
            Error::MultipleRoots(_) => RunError::Verification(e.to_string()),
            e => RunError::Numeric(e.to_string()),
        }
    }
}

fn resolve_params(values: &ParamValues, root_tol: f64) -> Result<Params, RunError> {
    let params = values.params().map_err(RunError::Usage)?;
    match values.lambda_frac {
        Some(f) => {
            let lam1 = first_eigenvalue(params.n, params.p, params.mu, root_tol)?;
            Ok(params.with_lambda(f * lam1)?)
        }
        None => Ok(params),
    }
}

/// Parses the command line (including the program name) into a [`RunConfig`].
///
/// `Err(Ok(text))` is help or version output, `Err(Err(msg))` a usage error.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, Result<String, String>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return Err(match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Ok(e.to_string())
                }
                _ => Err(e.to_string().lines().next().unwrap_or("invalid arguments").trim().to_string()),
            });
        }
    };
    build_config(cli).map_err(Err)
}

fn build_config(cli: Cli) -> Result<RunConfig, String> {
    let (task, common, profile, axes) = match cli.task {
        Command::Exponents(c) => (Task::Exponents, c, None, vec![]),
        Command::ClosedForm(c) => (Task::ClosedForm, c, None, vec![]),
        Command::GroundState(c) => (Task::GroundState, c, None, vec![]),
        Command::Ball(c) => (Task::Ball, c, None, vec![]),
        Command::Eigen(c) => (Task::Eigen, c, None, vec![]),
        Command::Verify { common, profile } => (Task::Verify, common, profile, vec![]),
        Command::Sweep {
            common,
            axes,
            sweep_task,
        } => (Task::Sweep(sweep_task), common, None, axes),
    };
    let file = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("cannot read --config {}: {e}", path.display()))?;
            parse_config_file(&text)?
        }
        None => FileConfig::default(),
    };
    let v = &file.values;
    let values = ParamValues {
        n: common.n.or(v.n),
        p: common.p.or(v.p),
        mu: common.mu.or(v.mu),
        s: common.s.or(v.s),
        lambda: common.lambda.or(v.lambda),
        lambda_frac: common.lambda_frac.or(v.lambda_frac),
    };
    let grid = Grid {
        r_min: common.r_min.or(file.r_min).unwrap_or(1e-6),
        r_max: common.r_max.or(file.r_max).unwrap_or(1e6),
        samples: common.samples.or(file.samples).unwrap_or(2001),
    };
    if !(grid.r_min > 0.0 && grid.r_min < grid.r_max && grid.r_max.is_finite()) {
        return Err("--r-min must be positive and below --r-max".into());
    }
    if grid.samples < 2 {
        return Err("--samples must be at least 2".into());
    }
    let tol = Tolerances {
        quad: common.quad_tol.or(file.quad_tol).unwrap_or(1e-12),
        ode: common.ode_tol.or(file.ode_tol).unwrap_or(1e-12),
        root: common.root_tol.or(file.root_tol).unwrap_or(1e-13),
    };
    for (flag, t) in [("--quad-tol", tol.quad), ("--ode-tol", tol.ode), ("--root-tol", tol.root)] {
        if !(t > 0.0 && t < 1.0) {
            return Err(format!("{flag} must lie in (0, 1)"));
        }
    }
    let sweep = if axes.is_empty() {
        file.axes
    } else {
        axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?
    };
    if matches!(task, Task::Sweep(_)) && sweep.is_empty() {
        return Err("sweep needs at least one --axis".into());
    }
    Ok(RunConfig {
        task,
        values,
        grid,
        tol,
        out: common.out.or(file.out),
        sweep,
        profile,
        timing: common.timing,
    })
}

#[derive(Debug, Default)]
struct FileConfig {
    values: ParamValues,
    r_min: Option<f64>,
    r_max: Option<f64>,
    samples: Option<usize>,
    quad_tol: Option<f64>,
    ode_tol: Option<f64>,
    root_tol: Option<f64>,
    out: Option<PathBuf>,
    axes: Vec<Axis>,
}

/// `key = value` lines; `#` starts a comment. Keys are the long flag names, plus `axis`.
fn parse_config_file(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| format!("config line {}: invalid value for --{key}: `{value}`", i + 1))
        };
        match key {
            "N" | "p" | "mu" | "s" | "lambda" | "lambda-frac" => cfg.values.set(key, num()?)?,
            "r-min" => cfg.r_min = Some(num()?),
            "r-max" => cfg.r_max = Some(num()?),
            "samples" => {
                cfg.samples = Some(
                    value
                        .parse()
                        .map_err(|_| format!("config line {}: invalid value for --samples: `{value}`", i + 1))?,
                )
            }
            "quad-tol" => cfg.quad_tol = Some(num()?),
            "ode-tol" => cfg.ode_tol = Some(num()?),
            "root-tol" => cfg.root_tol = Some(num()?),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "axis" => cfg.axes.push(parse_axis(value)?),
            _ => return Err(format!("config line {}: unknown key `{key}`", i + 1)),
        }
    }
    Ok(cfg)
}

fn parse_axis(spec: &str) -> Result<Axis, String> {
    let (key, list) = spec
        .split_once('=')
        .ok_or_else(|| format!("--axis expects KEY=V1,V2,.., got `{spec}`"))?;
    let key = key.trim();
    if !matches!(key, "N" | "p" | "mu" | "s" | "lambda" | "lambda-frac") {
        return Err(format!("--axis: unknown parameter `{key}`"));
    }
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("--axis {key}: invalid value `{v}`")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(format!("--axis {key}: no values"));
    }
    Ok(Axis {
        key: key.to_string(),
        values,
    })
}

/// Scalar results of one run. Fields that do not apply are omitted from the JSON.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_star: Option<f64>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<String>,
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_first_integral: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ode_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pohozaev_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_fit_0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_fit_inf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl Summary {
    fn for_params(params: &Params) -> Result<Self, RunError> {
        let e = derive(params)?;
        Ok(Summary {
            params: Some(*params),
            gamma1: Some(e.gamma1),
            gamma2: Some(e.gamma2),
            m: Some(e.m),
            ..Default::default()
        })
    }
}

/// Result of a solver task: the summary and, for profile-producing tasks, the profile.
#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub summary: Summary,
    pub profile: Option<(RadialProfile, f64)>,
}

/// Runs one of the solver tasks for validated parameters.
pub fn run_task(task: Task, params: &Params, cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let mut summary = Summary::for_params(params)?;
    let mut profile = None;
    match task {
        Task::Exponents => {
            let e = derive(params)?;
            summary.delta = Some(e.delta);
            summary.mu_bar = Some(e.mu_bar);
            summary.p_star = Some(e.p_star_s);
        }
        Task::ClosedForm => {
            let family = select(params)
                .ok_or_else(|| RunError::Usage("no closed form for these parameters: requires p = 2 or mu = 0".into()))?;
            let radii = crate::numerics::log_space(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.samples);
            let (u, du): (Vec<f64>, Vec<f64>) = radii
                .iter()
                .map(|&r| family.eval(r))
                .collect::<crate::Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            let prof = RadialProfile::from_values(params, radii, u, du)?;
            let (c1, c2) = family.asymptotic_constants();
            summary.closed_form = Some(format!("{:?}", family.kind));
            summary.c1 = Some(c1);
            summary.c2 = Some(c2);
            summary.slope_fit_0 = fit_power_slope(&prof, End::Zero, 2).ok().map(|f| f.slope);
            summary.slope_fit_inf = fit_power_slope(&prof, End::Infinity, 2).ok().map(|f| f.slope);
            profile = Some((prof, params.p));
        }
        Task::GroundState => {
            let sol = solve(params, &cfg.ground_config())?;
            summary.c1 = Some(sol.c1);
            summary.c2 = Some(sol.c2);
            summary.t_minus = sol.t_minus;
            summary.max_first_integral = Some(sol.report.max_first_integral);
            summary.max_ode_residual = Some(sol.report.max_ode_residual);
            summary.slope_fit_0 = sol.report.slope_fit_0;
            summary.slope_fit_inf = sol.report.slope_fit_inf;
            profile = Some((sol.profile, params.p));
        }
        Task::Ball => {
            if cfg.grid.r_min >= 1.0 {
                return Err(RunError::Usage("--r-min must be below 1 for the ball problem".into()));
            }
            let sol = match solve_ball(params, None, &cfg.ball_config()) {
                Err(Error::NoSignChange { .. }) if params.lambda <= 0.0 => {
                    return Err(RunError::Numeric(NONEXISTENCE_NOTE.into()))
                }
                r => r?,
            };
            summary.c1 = Some(sol.amplitude_c);
            summary.pohozaev_defect = Some(sol.pohozaev_defect);
            summary.boundary_slope = Some(sol.boundary_slope);
            summary.slope_fit_0 = fit_power_slope(&sol.profile, End::Zero, 2).ok().map(|f| f.slope);
            if cfg.values.lambda_frac.is_some() {
                summary.lambda1 = Some(first_eigenvalue(params.n, params.p, params.mu, cfg.tol.root)?);
            }
            profile = Some((sol.profile, params.p));
        }
        Task::Eigen => {
            summary.lambda1 = Some(first_eigenvalue(params.n, params.p, params.mu, cfg.tol.root)?);
        }
        Task::Verify | Task::Sweep(_) => unreachable!("not a solver task"),
    }
    Ok(TaskOutput { summary, profile })
}

/// CSV text of a profile with the `w` column; `w` is left empty where `u ≤ 0`.
pub fn profile_csv(profile: &RadialProfile, p: f64) -> String {
    let w = profile.w(p);
    let mut out = String::with_capacity(profile.len() * 96);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..profile.len() {
        let _ = write!(
            out,
            "{:?},{:?},{:?},{:?},",
            profile.r[i], profile.u[i], profile.du_dr[i], profile.flux[i]
        );
        if profile.u[i] > 0.0 {
            let _ = write!(out, "{:?}", w[i]);
        }
        out.push('\n');
    }
    out
}

pub fn emit_profile(profile: &RadialProfile, p: f64, path: &Path) -> Result<(), RunError> {
    write_file(path, &profile_csv(profile, p))
}

pub fn emit_summary<T: Serialize>(summary: &T, path: &Path) -> Result<(), RunError> {
    write_file(path, &to_json(summary)?)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, RunError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| RunError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::Numeric(format!("cannot write {}: {e}", path.display())))
}

/// Reads a profile CSV with the header `r,u,du_dr,flux,w`.
pub fn read_profile(path: &Path) -> Result<RadialProfile, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Usage(format!("cannot read --profile {}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(RunError::Usage(format!("--profile {}: header must be `{CSV_HEADER}`", path.display())));
    }
    let mut cols: [Vec<f64>; 4] = Default::default();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(RunError::Usage(format!("--profile line {}: expected 5 fields", i + 2)));
        }
        for (col, f) in cols.iter_mut().zip(&fields[..4]) {
            let v = f
                .trim()
                .parse::<f64>()
                .map_err(|_| RunError::Usage(format!("--profile line {}: invalid number `{f}`", i + 2)))?;
            col.push(v);
        }
    }
    let [r, u, du, flux] = cols;
    RadialProfile::new(r, u, du, flux).map_err(|e| RunError::Usage(format!("--profile: {e}")))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes the outputs of a solver task: files under the prefix, or the summary on stdout.
fn deliver(out: &TaskOutput, prefix: Option<&Path>) -> Result<(), RunError> {
    match prefix {
        Some(prefix) => {
            if let Some((prof, p)) = &out.profile {
                emit_profile(prof, *p, &with_ext(prefix, "csv"))?;
            }
            emit_summary(&out.summary, &with_ext(prefix, "json"))
        }
        None => {
            print!("{}", to_json(&out.summary)?);
            Ok(())
        }
    }
}

/// Runs the checks in scope for the configuration and prints a pass/fail table.
pub fn run_verify(cfg: &RunConfig) -> Result<i32, RunError> {
    let suite = if let Some(path) = &cfg.profile {
        let params = cfg.params()?;
        verify_profile(&read_profile(path)?, &params)?
    } else if cfg.values.is_empty() {
        default_suite(&cfg.ground_config(), &cfg.ball_config())?
    } else {
        check_params(&cfg.params()?, &cfg.ground_config(), &cfg.ball_config())?
    };
    print!("{}", format_suite(&suite));
    if let Some(prefix) = &cfg.out {
        emit_summary(&suite, &with_ext(prefix, "json"))?;
    }
    Ok(if suite.passed() { EXIT_OK } else { EXIT_VERIFY })
}

fn verify_profile(profile: &RadialProfile, params: &Params) -> Result<Suite, RunError> {
    let mut suite = Suite::default();
    if select(params).is_some() {
        suite.checks.push(compare_to_closed_form(profile, params)?);
    }
    let e = derive(params)?;
    let ctx = params_context(params);
    for (name, end, g) in [
        ("slope at zero + gamma1", End::Zero, e.gamma1),
        ("slope at infinity + gamma2", End::Infinity, e.gamma2),
    ] {
        let err = fit_power_slope(profile, end, 2).map_or(f64::NAN, |f| (f.slope + g).abs());
        suite.checks.push(CheckReport::new(name, err, 1e-3, &ctx));
    }
    Ok(suite)
}

pub fn format_suite(suite: &Suite) -> String {
    let mut s = String::new();
    let width = suite.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &suite.checks {
        let _ = writeln!(
            s,
            "{}  {:width$}  measured={:<12.4e} allowed={:<12.4e} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.allowed,
            c.context,
        );
    }
    for n in &suite.notes {
        let _ = writeln!(s, "note: {n}");
    }
    let passed = suite.checks.iter().filter(|c| c.passed).count();
    let _ = writeln!(s, "{passed}/{} checks passed", suite.checks.len());
    s
}

#[derive(Debug, Serialize)]
struct IndexEntry {
    index: usize,
    params: serde_json::Map<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn sweep_points(base: &ParamValues, axes: &[Axis]) -> Result<Vec<ParamValues>, String> {
    let mut points = vec![*base];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for pt in &points {
            for &v in &axis.values {
                let mut q = *pt;
                q.set(&axis.key, v)?;
                next.push(q);
            }
        }
        points = next;
    }
    Ok(points)
}

fn values_json(v: &ParamValues) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    if let Some(n) = v.n {
        m.insert("N".into(), n.into());
    }
    for (k, x) in [("p", v.p), ("mu", v.mu), ("s", v.s), ("lambda", v.lambda), ("lambda_frac", v.lambda_frac)] {
        if let Some(x) = x {
            m.insert(k.into(), x.into());
        }
    }
    m
}

/// Evaluates the sweep points in parallel, each writing its own files, then writes the index.
pub fn run_sweep(cfg: &RunConfig, task: SweepTask) -> Result<i32, RunError> {
    let points = sweep_points(&cfg.values, &cfg.sweep).map_err(RunError::Usage)?;
    let prefix = cfg.out.clone().unwrap_or_else(|| PathBuf::from("sweep"));
    let file_name = |k: usize, ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(format!("_{k:04}.{ext}"));
        PathBuf::from(s)
    };
    let entries: Vec<IndexEntry> = points
        .par_iter()
        .enumerate()
        .map(|(k, values)| {
            let start = Instant::now();
            let result = resolve_params(values, cfg.tol.root).and_then(|params| {
                let mut point_cfg = cfg.clone();
                point_cfg.values = *values;
                let mut out = run_task(task.into(), &params, &point_cfg)?;
                if cfg.timing {
                    out.summary.runtime_seconds = Some(start.elapsed().as_secs_f64());
                }
                let json = file_name(k, "json");
                emit_summary(&out.summary, &json)?;
                let csv = match &out.profile {
                    Some((prof, p)) => {
                        let path = file_name(k, "csv");
                        emit_profile(prof, *p, &path)?;
                        Some(path)
                    }
                    None => None,
                };
                Ok((json, csv))
            });
            let base = |p: PathBuf| p.file_name().map(|f| f.to_string_lossy().into_owned());
            match result {
                Ok((json, csv)) => IndexEntry {
                    index: k,
                    params: values_json(values),
                    summary: base(json),
                    profile: csv.and_then(base),
                    error: None,
                },
                Err(e) => IndexEntry {
                    index: k,
                    params: values_json(values),
                    summary: None,
                    profile: None,
                    error: Some(e.message().to_string()),
                },
            }
        })
        .collect();
    let mut index = prefix.as_os_str().to_owned();
    index.push("_index.json");
    emit_summary(&entries, Path::new(&index))?;
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    if failed > 0 {
        eprintln!("error: {failed} of {} sweep points failed (see {})", entries.len(), Path::new(&index).display());
        return Ok(EXIT_NUMERIC);
    }
    Ok(EXIT_OK)
}

/// Executes a parsed configuration and returns the exit code.
pub fn execute(cfg: &RunConfig) -> Result<i32, RunError> {
    let start = Instant::now();
    match cfg.task {
        Task::Verify => run_verify(cfg),
        Task::Sweep(task) => run_sweep(cfg, task),
        task => {
            let params = cfg.params()?;
            let mut out = run_task(task, &params, cfg)?;
            if cfg.timing {
                out.summary.runtime_seconds = Some(start.elapsed().as_secs_f64());
            }
            deliver(&out, cfg.out.as_deref())?;
            Ok(EXIT_OK)
        }
    }
}

/// Full command-line entry point.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(Ok(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(Err(msg)) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    match execute(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
