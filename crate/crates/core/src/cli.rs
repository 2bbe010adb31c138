//! Command-line front end: configuration handling and the `spherical`,
//! `spectral`, `ergodic` and `oracle` commands.
//!
//! Every command resolves a flat `key = value` configuration (file, then
//! command-line overrides), writes it as `config.resolved` into the run
//! directory, and emits CSV tables plus a JSON summary. Each CSV starts with
//! `#` comment lines carrying the resolved configuration, so identical
//! configurations produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::actions::observable::{
    self, constant, disk_bump, height_bump, k_twist, power, Observable,
};
use crate::actions::sampling::sample;
use crate::averages::{convergence_study, maximal_ratio, BumpFunction, NodeSchedule, TimeGrid};
use crate::error::{Error, Result};
use crate::oracle;
use crate::quadrature::adaptive_gk_real;
use crate::spectral::{
    bessel_check, derivative_multiplier_check, in_sigma_eps, tail_bound, CircleModelVector,
    SpectralSetParams, DEFAULT_TRUNCATION,
};
use crate::spherical::{decay_sweep, xi, Parity, QuadratureSpec, RepParam};

/// Environment variable that overrides the run directory.
pub const RUN_DIR_ENV: &str = "SL2ERGO_RUN_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_GATE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sl2-ergodic",
    version,
    about = "Character-spherical averages on SL2(R)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spherical-function decay sweep and the Xi oracle column.
    Spherical(CommonArgs),
    /// Bessel and derivative-multiplier residuals, spectral-set and tail tables.
    Spectral(CommonArgs),
    /// Pointwise convergence and maximal-function studies on the modular surface.
    Ergodic(CommonArgs),
    /// Reference values from the independent oracles, written as golden files.
    Oracle(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spherical(_) => "spherical",
            Command::Spectral(_) => "spectral",
            Command::Ergodic(_) => "ergodic",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Spherical(a)
            | Command::Spectral(a)
            | Command::Ergodic(a)
            | Command::Oracle(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Additional `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// A resolved flat configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("config line {}: expected key = value", i + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("config line {}: empty key", i + 1)));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(RunConfig { values })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Parse(format!("config key {key} = {v:?}: {e}"))),
        }
    }

    fn list<T: std::str::FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|e| Error::Parse(format!("config key {key} item {s:?}: {e}")))
                })
                .collect(),
        }
    }

    /// Records a default for `key` when it is not already set, so the
    /// resolved file lists every parameter the run used.
    fn default_value(&mut self, key: &str, value: impl ToString) {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| value.to_string());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn header(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    /// Merges the configuration file and command-line overrides.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::parse(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = args.seed {
            cfg.set("seed", v);
        }
        if let Some(v) = args.t_max {
            cfg.set("t_max", v);
        }
        if let Some(v) = args.grid_step {
            cfg.set("grid_step", v);
        }
        if let Some(v) = args.samples {
            cfg.set("samples", v);
        }
        if let Some(v) = args.tolerance {
            cfg.set("tolerance", v);
        }
        for kv in &args.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim());
        }
        Ok(cfg)
    }
}

/// Run directory: `--out-dir`, else the environment override, else the
/// `out_dir` key, else `runs/<command>`.
pub fn run_dir(command: &str, args: &CommonArgs, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = &args.out_dir {
        return p.clone();
    }
    if let Ok(p) = std::env::var(RUN_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    cfg.get("out_dir")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new("runs").join(command))
}

/// Outcome of a command: files written and whether every gate passed.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

struct Writer {
    dir: PathBuf,
    header: String,
    files: Vec<PathBuf>,
}

impl Writer {
    fn csv(&mut self, name: &str, columns: &str, rows: &[String]) -> Result<()> {
        let mut text = self.header.clone();
        text.push_str(columns);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(name, &text)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn gate(name: &str, passed: bool, detail: String) -> Gate {
    Gate {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn check_config<T>(r: Result<T>) -> std::result::Result<T, CliError> {
    r.map_err(CliError::Config)
}

/// Failure classes mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(Error),
    #[error("run failed: {0}")]
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(_) => EXIT_GATE_FAILED,
        }
    }
}

/// Resolves the configuration, runs the command and returns its outcome.
pub fn execute(command: &Command) -> std::result::Result<RunOutcome, CliError> {
    let args = command.args();
    let mut cfg = check_config(RunConfig::resolve(args))?;
    let dir = run_dir(command.name(), args, &cfg);
    cfg.set("command", command.name());
    // fill defaults so that the resolved file and headers are complete
    check_config(fill_defaults(command.name(), &mut cfg))?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Run(e.into()))?;
    let mut w = Writer {
        dir: dir.clone(),
        header: cfg.header(),
        files: Vec::new(),
    };
    w.write("config.resolved", &cfg.render())
        .map_err(CliError::Run)?;
    let gates = match command {
        Command::Spherical(_) => cmd_spherical(&cfg, &mut w),
        Command::Spectral(_) => cmd_spectral(&cfg, &mut w),
        Command::Ergodic(_) => cmd_ergodic(&cfg, &mut w),
        Command::Oracle(_) => cmd_oracle(&cfg, &mut w),
    };
    let gates = gates.map_err(|e| match e {
        Error::Parse(_) | Error::InvalidParameter(_) | Error::OutOfRange { .. } => {
            CliError::Config(e)
        }
        other => CliError::Run(other),
    })?;
    let outcome = RunOutcome {
        files: w.files.clone(),
        gates,
    };
    w.json("gates.json", &outcome.gates)
        .map_err(CliError::Run)?;
    Ok(RunOutcome {
        files: w.files,
        gates: outcome.gates,
    })
}

fn fill_defaults(command: &str, cfg: &mut RunConfig) -> Result<()> {
    cfg.default_value("seed", 20240601u64);
    cfg.default_value("tolerance", 1e-8);
    match command {
        "spherical" => {
            cfg.default_value("lambdas", "0,1,5,20");
            cfg.default_value("s_values", "0.1,0.3,0.5,0.7,0.9");
            cfg.default_value("ns", "0,2,-2,8,-8");
            cfg.default_value("t_max", 10.0);
            cfg.default_value("grid_step", 0.25);
            cfg.default_value("xi_times", "0,0.5,1,2,5,10");
        }
        "spectral" => {
            cfg.default_value("samples", 200);
            cfg.default_value("t_max", 3.0);
            cfg.default_value("bessel_tol", 1e-6);
            cfg.default_value("multiplier_tol", 1e-5);
            cfg.default_value("eps_values", "0.1,0.3,0.5,0.7,0.9");
            cfg.default_value("tail_n", "1,2,5,10");
            cfg.default_value("tail_eps", "0.1,0.3,0.5");
            cfg.default_value("tail_delta", 1.0);
        }
        "ergodic" => {
            cfg.default_value("observable", "bump");
            cfg.default_value("samples", 100);
            cfg.default_value("times", "2,4,6,8");
            cfg.default_value("gate", 0.05);
            cfg.default_value("base_k", 64);
            cfg.default_value("k_doubling", 1.0);
            cfg.default_value("max_k", 32768);
            cfg.default_value("s_nodes", 32);
            cfg.default_value("maximal", false);
            cfg.default_value("maximal_samples", 500);
            cfg.default_value("t_max", 10.0);
            cfg.default_value("grid_step", 0.1);
            cfg.default_value("lattice_step", 0.02);
            cfg.default_value("maximal_k_nodes", 64);
        }
        "oracle" => {
            cfg.default_value("xi_times", "0,0.5,1,2,5,10");
        }
        other => return Err(Error::InvalidParameter(format!("unknown command {other}"))),
    }
    Ok(())
}

fn reps_from(cfg: &RunConfig) -> Result<Vec<RepParam>> {
    let mut reps = Vec::new();
    for l in cfg.list::<f64>("lambdas", &[])? {
        reps.push(RepParam::principal_even(l)?);
    }
    for s in cfg.list::<f64>("s_values", &[])? {
        reps.push(RepParam::complementary(s)?);
    }
    Ok(reps)
}

fn time_list(t_max: f64, step: f64) -> Result<Vec<f64>> {
    Ok(TimeGrid::uniform(0.0, t_max, step)?.values().to_vec())
}

/// Decay sweep over the configured grid, plus the Xi column against the AGM
/// oracle.
fn cmd_spherical(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Gate>> {
    let q = QuadratureSpec::with_tol(cfg.typed("tolerance", 1e-8)?);
    let reps = reps_from(cfg)?;
    let ns = cfg.list::<i32>("ns", &[])?;
    let ts = time_list(cfg.typed("t_max", 10.0)?, cfg.typed("grid_step", 0.25)?)?;
    let sweep = decay_sweep(&reps, &ns, &ts, &q)?;
    let rows: Vec<String> = sweep
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.rep.label(),
                r.n,
                num(r.t),
                num(r.phi.re),
                num(r.phi.im),
                num(r.phi.norm()),
                num(r.envelope * sweep.empirical_b),
                num(r.ratio),
                num(r.dphi.re),
                num(r.dphi.im),
                num(r.derivative_ratio),
                num(r.phi_err),
                r.converged
            )
        })
        .collect();
    w.csv(
        "spherical.csv",
        "rep,n,t,re_phi,im_phi,abs_phi,bound,ratio,re_dphi,im_dphi,derivative_ratio,phi_err,converged",
        &rows,
    )?;

    let xi_ts = cfg.list::<f64>("xi_times", &[])?;
    let mut xi_rows = Vec::new();
    let mut xi_worst: f64 = 0.0;
    let mut fitted_c: f64 = 0.0;
    for &t in &xi_ts {
        let a = xi(t, &q)?;
        let b = oracle::xi_agm(t);
        let rel = (a - b).abs() / b;
        xi_worst = xi_worst.max(rel);
        fitted_c = fitted_c.max(a / ((1.0 + t) * (-t).exp()));
        xi_rows.push(format!("{},{},{},{}", num(t), num(a), num(b), num(rel)));
    }
    w.csv("xi.csv", "t,xi_quadrature,xi_agm,rel_diff", &xi_rows)?;

    let all_finite = sweep
        .rows
        .iter()
        .all(|r| r.ratio.is_finite() && r.derivative_ratio.is_finite());
    let t0_ok = sweep
        .rows
        .iter()
        .filter(|r| r.t == 0.0)
        .all(|r| (r.phi.norm() - if r.n == 0 { 1.0 } else { 0.0 }).abs() < 1e-10);
    #[derive(Serialize)]
    struct Summary<'a> {
        empirical_b: f64,
        empirical_b_derivative: f64,
        rows: usize,
        skipped: &'a [(RepParam, i32)],
        unconverged_rows: usize,
        xi_max_rel_diff: f64,
        xi_fitted_c: f64,
    }
    w.json(
        "summary.json",
        &Summary {
            empirical_b: sweep.empirical_b,
            empirical_b_derivative: sweep.empirical_b_derivative,
            rows: sweep.rows.len(),
            skipped: &sweep.skipped,
            unconverged_rows: sweep.rows.iter().filter(|r| !r.converged).count(),
            xi_max_rel_diff: xi_worst,
            xi_fitted_c: fitted_c,
        },
    )?;
    Ok(vec![
        gate(
            "ratios_finite",
            all_finite,
            format!("B = {}", sweep.empirical_b),
        ),
        gate("t0_kronecker", t0_ok, "|Phi(0)| = delta".into()),
        gate(
            "xi_oracle",
            xi_worst <= 1e-8,
            format!("max rel diff {xi_worst:e}"),
        ),
    ])
}

/// Bessel and multiplier residuals on seeded random configurations, the
/// spectral-set table and the tail-bound table.
fn cmd_spectral(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Gate>> {
    let q = QuadratureSpec::with_tol(cfg.typed("tolerance", 1e-8)?);
    let tight = QuadratureSpec::with_tol(1e-12);
    let seed: u64 = cfg.typed("seed", 0)?;
    let count: usize = cfg.typed("samples", 200)?;
    let t_max: f64 = cfg.typed("t_max", 3.0)?;
    let bessel_tol: f64 = cfg.typed("bessel_tol", 1e-6)?;
    let mult_tol: f64 = cfg.typed("multiplier_tol", 1e-5)?;
    if !(t_max > 0.0 && t_max <= 4.0) {
        return Err(Error::InvalidParameter(format!(
            "spectral t_max must lie in (0, 4] for the sampled action, got {t_max}"
        )));
    }
    let configs = random_configurations(seed, count, t_max)?;
    let mut rows = Vec::new();
    let mut worst_bessel: f64 = 0.0;
    let mut worst_mult: f64 = 0.0;
    for (i, (rep, t, n, m, v)) in configs.iter().enumerate() {
        let b = bessel_check(rep, *t, *n, *m, v, &q)?;
        let d = derivative_multiplier_check(rep, *t, *n, *m, v, &tight)?;
        worst_bessel = worst_bessel.max(b.residual);
        worst_mult = worst_mult.max(d.residual);
        rows.push(format!(
            "{i},{},{},{n},{m},{},{},{},{},{},{},{}",
            rep.label(),
            num(*t),
            num(b.predicted),
            num(b.model),
            num(b.direct),
            num(b.residual),
            num(d.finite_difference),
            num(d.multiplier),
            num(d.residual)
        ));
    }
    w.csv(
        "bessel.csv",
        "index,rep,t,n,m,predicted,model,direct,bessel_residual,fd_derivative,multiplier,multiplier_residual",
        &rows,
    )?;

    let b = match cfg.get("b") {
        Some(_) => cfg.typed("b", 1.0)?,
        None => {
            let reps: Vec<RepParam> = [0.0, 1.0, 5.0, 20.0]
                .iter()
                .map(|l| RepParam::PrincipalEven { lambda: *l })
                .chain(
                    [0.1, 0.3, 0.5, 0.7, 0.9]
                        .iter()
                        .map(|s| RepParam::Complementary { s: *s }),
                )
                .collect();
            let ts = time_list(10.0, 0.5)?;
            decay_sweep(&reps, &[0, 2, -2, 8, -8], &ts, &q)?.empirical_b
        }
    };
    let eps_values = cfg.list::<f64>("eps_values", &[])?;
    let table_reps = [
        RepParam::PrincipalEven { lambda: 0.0 },
        RepParam::PrincipalEven { lambda: 1.0 },
        RepParam::PrincipalEven { lambda: 10.0 },
        RepParam::PrincipalOdd { lambda: 0.5 },
        RepParam::Complementary { s: 0.1 },
        RepParam::Complementary { s: 0.5 },
        RepParam::Complementary { s: 0.9 },
        RepParam::DiscreteOrLimit {
            k: 2,
            sign: crate::spherical::Sign::Plus,
        },
        RepParam::Trivial,
    ];
    let mut sigma_rows = Vec::new();
    for rep in &table_reps {
        for &eps in &eps_values {
            for bb in [1.0, b] {
                let p = SpectralSetParams::new(eps, bb)?;
                sigma_rows.push(format!(
                    "{},{},{},{},{},{}",
                    rep.label(),
                    num(eps),
                    num(bb),
                    num(rep.eps_tau()),
                    num(crate::spectral::c_tau(rep, bb)),
                    in_sigma_eps(rep, &p)
                ));
            }
        }
    }
    w.csv(
        "sigma_eps.csv",
        "rep,eps,b,eps_tau,c_tau,member",
        &sigma_rows,
    )?;

    let mut tail_rows = Vec::new();
    let mut worst_tail: f64 = 0.0;
    let mut monotone = true;
    let delta: f64 = cfg.typed("tail_delta", 1.0)?;
    for &eps in &cfg.list::<f64>("tail_eps", &[])? {
        let mut prev = f64::INFINITY;
        for &n in &cfg.list::<f64>("tail_n", &[])? {
            let tb = tail_bound(n, eps, delta, 1.0)?;
            let numeric = tail_integral(n, eps) / delta;
            let rel = (tb.exact - numeric).abs() / tb.exact;
            worst_tail = worst_tail.max(rel);
            monotone &= tb.exact < prev;
            prev = tb.exact;
            tail_rows.push(format!(
                "{},{},{},{},{},{},{},{}",
                num(n),
                num(eps),
                num(delta),
                num(tb.exact),
                num(numeric),
                num(tb.coarse_bound),
                tb.exact_within_coarse(),
                eps * (1.0 + n) <= n
            ));
        }
    }
    w.csv(
        "tail_bound.csv",
        "n,eps,delta,exact,numeric,coarse_bound,exact_le_coarse,eps_one_plus_n_le_n",
        &tail_rows,
    )?;
    #[derive(Serialize)]
    struct Summary {
        configurations: usize,
        max_bessel_residual: f64,
        max_multiplier_residual: f64,
        b_used: f64,
        max_tail_rel_diff: f64,
        tail_monotone: bool,
    }
    w.json(
        "summary.json",
        &Summary {
            configurations: configs.len(),
            max_bessel_residual: worst_bessel,
            max_multiplier_residual: worst_mult,
            b_used: b,
            max_tail_rel_diff: worst_tail,
            tail_monotone: monotone,
        },
    )?;
    Ok(vec![
        gate(
            "bessel",
            worst_bessel <= bessel_tol,
            format!("max residual {worst_bessel:e}"),
        ),
        gate(
            "multiplier",
            worst_mult <= mult_tol,
            format!("max residual {worst_mult:e}"),
        ),
        gate(
            "tail_closed_form",
            worst_tail <= 1e-10,
            format!("max rel diff {worst_tail:e}"),
        ),
        gate("tail_monotone", monotone, "exact decreasing in N".into()),
    ])
}

/// `int_N^inf (1/eps)(1 + u) e^{-eps u} du` by adaptive quadrature after
/// `u = N + x / (1 - x)`.
pub fn tail_integral(n: f64, eps: f64) -> f64 {
    let g = |x: f64| {
        if x >= 1.0 {
            return 0.0;
        }
        let u = n + x / (1.0 - x);
        (1.0 / eps) * (1.0 + u) * (-eps * u).exp() / ((1.0 - x) * (1.0 - x))
    };
    adaptive_gk_real(g, &[0.0, 0.5, 0.9, 0.99, 1.0], 1e-14, 0.0, 1 << 20).0
}

type Configuration = (RepParam, f64, i32, i32, CircleModelVector);

/// Seeded random `(rep, t, n, m, v)` draws for the Bessel and multiplier
/// checks.
pub fn random_configurations(seed: u64, count: usize, t_max: f64) -> Result<Vec<Configuration>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let rep = match rng.gen_range(0..3) {
            0 => RepParam::principal_even(rng.gen_range(0.0..20.0))?,
            1 => RepParam::principal_odd(rng.gen_range(0.0..20.0))?,
            _ => RepParam::complementary(rng.gen_range(0.05..0.95))?,
        };
        let parity = rep.parity();
        let offset = if parity == Parity::Even { 0 } else { 1 };
        let n = 2 * rng.gen_range(-4..=4) + offset;
        let m = 2 * rng.gen_range(-4..=4) + offset;
        let t = rng.gen_range(0.0..t_max);
        let coeffs: Vec<(i32, Complex64)> = (-8..=8)
            .map(|k| 2 * k + offset)
            .map(|k| {
                (
                    k,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let v = CircleModelVector::from_coeffs(parity, DEFAULT_TRUNCATION, coeffs)?;
        out.push((rep, t, n, m, v));
    }
    Ok(out)
}

/// Looks up an observable of the shipped library by name: `constant`,
/// `bump`, `disk`, `power:<a>`, `twist:<n>`.
pub fn observable_by_name(name: &str) -> Result<Observable> {
    let bump = || height_bump(1.2, 4.0);
    match name.split_once(':') {
        None => match name {
            "constant" => Ok(constant(1.0)),
            "bump" => bump(),
            "disk" => disk_bump(Complex64::new(0.0, 1.42), 0.3),
            _ => Err(Error::InvalidParameter(format!(
                "unknown observable {name:?}"
            ))),
        },
        Some(("power", a)) => power(
            a.parse()
                .map_err(|e| Error::Parse(format!("power exponent {a:?}: {e}")))?,
        ),
        Some(("twist", n)) => k_twist(
            &bump()?,
            n.parse()
                .map_err(|e| Error::Parse(format!("twist index {n:?}: {e}")))?,
        ),
        _ => Err(Error::InvalidParameter(format!(
            "unknown observable {name:?}"
        ))),
    }
}

/// Convergence study (and optionally the maximal-function ratio) for one
/// library observable.
fn cmd_ergodic(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Gate>> {
    let name = cfg.get("observable").unwrap_or("bump").to_string();
    let f = observable_by_name(&name)?;
    let seed: u64 = cfg.typed("seed", 0)?;
    let count: usize = cfg.typed("samples", 100)?;
    let times = cfg.list::<f64>("times", &[])?;
    let gate_value: f64 = cfg.typed("gate", 0.05)?;
    let schedule = NodeSchedule {
        base_k: cfg.typed("base_k", 64)?,
        doubling: cfg.typed("k_doubling", 1.0)?,
        max_k: cfg.typed("max_k", 32768)?,
        s_nodes: cfg.typed("s_nodes", 32)?,
    };
    let eta = BumpFunction::default();
    let points = sample(seed, count)?;
    w.write("samples.csv", &points.to_csv())?;
    let report = convergence_study(&f, &points, &times, &eta, schedule)?;
    let header: Vec<String> = cfg
        .render()
        .lines()
        .map(str::to_string)
        .chain([format!("limit = {}", report.limit)])
        .collect();
    w.write("convergence.csv", &report.to_csv(&header))?;
    #[derive(Serialize)]
    struct Summary<'a> {
        observable: &'a str,
        limit: Complex64,
        seed: u64,
        points: usize,
        schedule: NodeSchedule,
        per_t: &'a [crate::averages::ConvergenceSummary],
        strictly_decreasing: bool,
        final_max_deviation: f64,
        gate: f64,
    }
    let decreasing = report.max_deviation_strictly_decreasing();
    let final_dev = report.final_max_deviation();
    w.json(
        "convergence.json",
        &Summary {
            observable: &report.observable,
            limit: report.limit,
            seed,
            points: count,
            schedule,
            per_t: &report.summary,
            strictly_decreasing: decreasing,
            final_max_deviation: final_dev,
            gate: gate_value,
        },
    )?;
    let mut gates = vec![
        gate(
            "strictly_decreasing",
            decreasing,
            format!("{name}: max deviation along {times:?}"),
        ),
        gate(
            "final_deviation",
            final_dev <= gate_value,
            format!("{final_dev:e} vs gate {gate_value:e}"),
        ),
    ];
    if cfg.typed("maximal", false)? {
        let grid = TimeGrid::uniform(0.0, cfg.typed("t_max", 10.0)?, cfg.typed("grid_step", 0.1)?)?;
        let m_points = sample(seed.wrapping_add(1), cfg.typed("maximal_samples", 500)?)?;
        let r = maximal_ratio(
            &f,
            &m_points,
            &grid,
            &eta,
            cfg.typed("lattice_step", 0.02)?,
            cfg.typed("maximal_k_nodes", 64)?,
        )?;
        gates.push(gate(
            "maximal_finite",
            r.ratio.is_finite(),
            format!("ratio {}", r.ratio),
        ));
        w.json("maximal.json", &r)?;
    }
    Ok(gates)
}

/// Writes reference values from the independent oracles and compares them
/// with the production code paths.
fn cmd_oracle(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Gate>> {
    let q = QuadratureSpec::with_tol(cfg.typed("tolerance", 1e-8)?);
    let mut xi_rows = Vec::new();
    let mut xi_worst: f64 = 0.0;
    for t in cfg.list::<f64>("xi_times", &[])? {
        let golden = oracle::xi_agm(t);
        let v = xi(t, &q)?;
        xi_worst = xi_worst.max((v - golden).abs() / golden);
        xi_rows.push(format!("{},{},{}", num(t), num(golden), num(v)));
    }
    w.csv("xi_golden.csv", "t,xi_agm,xi_quadrature", &xi_rows)?;

    let mut mean_rows = Vec::new();
    let mut mean_worst: f64 = 0.0;
    let twist = k_twist(&height_bump(1.2, 4.0)?, 2)?;
    for f in observable::library().iter().filter(|f| f.is_k_invariant()) {
        let golden = domain_oracle(f)?;
        let m = f.exact_mean.map(|m| m.re).unwrap_or(f64::NAN);
        mean_worst = mean_worst.max((m - golden).abs());
        mean_rows.push(format!("\"{}\",{},{}", f.description, num(golden), num(m)));
    }
    mean_rows.push(format!(
        "\"{}\",{},{}",
        twist.description,
        num(0.0),
        num(0.0)
    ));
    w.csv(
        "means_golden.csv",
        "observable,domain_quadrature,closed_form",
        &mean_rows,
    )?;

    let mut tail_rows = Vec::new();
    let mut tail_worst: f64 = 0.0;
    for eps in [0.1, 0.3, 0.5] {
        for n in [1.0, 2.0, 5.0, 10.0] {
            let golden = tail_integral(n, eps);
            let tb = tail_bound(n, eps, 1.0, 1.0)?;
            tail_worst = tail_worst.max((tb.exact - golden).abs() / golden);
            tail_rows.push(format!(
                "{},{},{},{}",
                num(n),
                num(eps),
                num(golden),
                num(tb.exact)
            ));
        }
    }
    w.csv(
        "tail_golden.csv",
        "n,eps,numeric_integral,closed_form",
        &tail_rows,
    )?;
    Ok(vec![
        gate("xi", xi_worst <= 1e-8, format!("max rel diff {xi_worst:e}")),
        gate(
            "means",
            mean_worst <= 1e-8,
            format!("max abs diff {mean_worst:e}"),
        ),
        gate(
            "tail",
            tail_worst <= 1e-10,
            format!("max rel diff {tail_worst:e}"),
        ),
    ])
}

/// Mean of a K-invariant library observable by 2-D domain quadrature.
fn domain_oracle(f: &Observable) -> Result<f64> {
    let eval = |x: f64, y: f64| {
        crate::actions::modular::ActionPoint::from_coords(Complex64::new(x, y), 0.0)
            .map(|p| f.eval(&p).re)
            .unwrap_or(0.0)
    };
    Ok(oracle::domain_average(eval, 1e-11))
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(outcome) => {
            for g in &outcome.gates {
                println!(
                    "{} {}: {}",
                    if g.passed { "PASS" } else { "FAIL" },
                    g.name,
                    g.detail
                );
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed() {
                EXIT_OK
            } else {
                EXIT_GATE_FAILED
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_overrides() {
        let cfg = RunConfig::parse("# comment\nseed = 7\n t_max=3.5 # trailing\n\n").unwrap();
        assert_eq!(cfg.get("seed"), Some("7"));
        assert_eq!(cfg.typed::<f64>("t_max", 0.0).unwrap(), 3.5);
        assert!(RunConfig::parse("no equals sign").is_err());
        assert!(cfg.typed::<u64>("t_max", 0).is_err());
        let args = CommonArgs {
            seed: Some(9),
            set: vec!["observable=power:0.5".into()],
            ..Default::default()
        };
        let r = RunConfig::resolve(&args).unwrap();
        assert_eq!(r.get("seed"), Some("9"));
        assert_eq!(r.get("observable"), Some("power:0.5"));
        let round = RunConfig::parse(&r.render()).unwrap();
        assert_eq!(round, r);
    }

    #[test]
    fn observables_by_name() {
        for n in ["constant", "bump", "disk", "power:0.5", "twist:2"] {
            assert!(observable_by_name(n).is_ok(), "{n}");
        }
        assert!(observable_by_name("twist:1").is_err());
        assert!(observable_by_name("nope").is_err());
    }

    #[test]
    fn config_errors_map_to_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let args = CommonArgs {
            out_dir: Some(dir.path().to_path_buf()),
            set: vec!["observable=nope".into()],
            ..Default::default()
        };
        let err = execute(&Command::Ergodic(args)).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }
}
