//! Command-line front end.
//!
//! Each subcommand reads an optional JSON config (`--config`), applies
//! `--set key=value` overrides and its own flags, validates everything, and
//! only then runs. Exit codes: 0 ok, 1 verification failure, 2 validation or
//! usage error, 3 bound requested outside its asymptotic regime.

pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::bounds::{self, BoundError, BoundResult, FieldSpec, TailParams};
use crate::fields::{self, field_spec, FieldModel};
use crate::lattice::{d_inf, make_blocking, partition, BlockingScheme};
use crate::mixing::{self, estimate_alpha_lower, gamma_min, shell_count, JointTable, MixingModel, ThresholdEvents};
use crate::montecarlo::{self, TailOptions};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "LATTICE_BERNSTEIN_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Regime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Regime(_) => 3,
            _ => 2,
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::AsymptoticRegime { .. } => CliError::Regime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}
validation_from!(
    crate::lattice::LatticeError,
    crate::mixing::MixingError,
    crate::fields::FieldError,
    crate::montecarlo::MonteCarloError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "lattice-bernstein", version, about = "Bernstein-type tail bounds for mixing random fields on Z^N")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the shell-count constant gamma = 3^N - 1 with a brute-force check.
    Gamma(GammaArgs),
    /// Dump the block partition of I_n.
    Partition(PartitionArgs),
    /// Evaluate the bound over an eps grid.
    Bound(ConfigArgs),
    /// Simulate a field, compare tail frequencies with the bound, write CSV.
    Verify(VerifyArgs),
    /// Empirical lower bound for alpha between two point sets.
    EstimateAlpha(ConfigArgs),
    /// Check the covariance inequality on a discrete joint table.
    Davydov(DavydovArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set n=64,64` or `--set mixing.kind=iid`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output file (stdout if absent).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    /// Dimension; prints N = 1..=6 when absent.
    #[arg(long, short = 'n', value_parser = clap::value_parser!(u32).range(1..=64))]
    pub n: Option<u32>,
    /// Largest radius used by the brute-force check.
    #[arg(long, default_value_t = 10_000)]
    pub brute_max: u64,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Cube sides, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long = "p", short = 'P', value_delimiter = ',')]
    pub p: Option<Vec<u64>>,
    #[arg(long = "q", short = 'Q', value_delimiter = ',')]
    pub q: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Worker threads (default: config `workers`, then $LATTICE_BERNSTEIN_WORKERS, then all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiply every bound by this factor before checking (checker self-test).
    #[arg(long)]
    pub scale_bound: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DavydovArgs {
    /// Joint table: one `x y mass` triple per line.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub r: f64,
}

/// Parses `args` and runs; returns the process exit code.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Gamma(a) => cmd_gamma(&a),
        Command::Partition(a) => cmd_partition(&a),
        Command::Bound(a) => cmd_bound(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::EstimateAlpha(a) => cmd_estimate_alpha(&a),
        Command::Davydov(a) => cmd_davydov(&a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Max over `u <= limit` of `shell_count(N, u) / u^(N-1)`, stopping early if
/// the shell count leaves 128 bits. Returns the value and the radius reached.
pub fn brute_force_gamma(dim: u32, limit: u64) -> (f64, u64) {
    let mut best: f64 = 0.0;
    let mut reached = 0;
    for u in 1..=limit {
        let Ok(count) = shell_count(dim, u) else { break };
        best = best.max(count as f64 / (u as f64).powi(dim as i32 - 1));
        reached = u;
    }
    (best, reached)
}

fn cmd_gamma(args: &GammaArgs) -> Result<u8, CliError> {
    let dims: Vec<u32> = match args.n {
        Some(n) => vec![n],
        None => (1..=6).collect(),
    };
    let mut text = String::new();
    for dim in dims {
        let (brute, reached) = brute_force_gamma(dim, args.brute_max);
        text.push_str(&format!(
            "N={dim} gamma={} brute_force={} (u <= {reached})\n",
            gamma_min(dim),
            brute
        ));
    }
    emit(None, &text)?;
    Ok(0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionConfig {
    #[serde(deserialize_with = "config::one_or_many")]
    n: Vec<u64>,
    #[serde(rename = "P", deserialize_with = "config::one_or_many")]
    p: Vec<u64>,
    #[serde(rename = "Q", deserialize_with = "config::one_or_many")]
    q: Vec<u64>,
}

fn cmd_partition(args: &PartitionArgs) -> Result<u8, CliError> {
    let mut map = config::load(args.common.config.as_deref(), &args.common.set)?;
    for (key, v) in [("n", &args.n), ("P", &args.p), ("Q", &args.q)] {
        if let Some(v) = v {
            config::set(&mut map, key, json!(v))?;
        }
    }
    let cfg: PartitionConfig = config::typed(map)?;
    let scheme = make_blocking(&cfg.n, &cfg.p, &cfg.q)?;
    emit(args.common.out.as_deref(), &partition(&scheme).dump())?;
    Ok(0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EpsList {
    One(f64),
    Many(Vec<f64>),
}

impl EpsList {
    fn values(&self) -> Vec<f64> {
        match self {
            EpsList::One(e) => vec![*e],
            EpsList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundConfig {
    #[serde(rename = "N")]
    dim: Option<u32>,
    #[serde(deserialize_with = "config::one_or_many")]
    n: Vec<u64>,
    #[serde(rename = "B")]
    b: Option<f64>,
    sigma2: Option<f64>,
    mixing: Option<MixingModel>,
    tail: Option<TailParams>,
    /// Take `B`, `sigma2`, mixing and tail from a field model instead.
    model: Option<Value>,
    eps: EpsList,
    beta: Option<f64>,
    #[serde(rename = "P", default, deserialize_with = "config::opt_one_or_many")]
    p: Option<Vec<u64>>,
    #[serde(rename = "Q", default, deserialize_with = "config::opt_one_or_many")]
    q: Option<Vec<u64>>,
    #[serde(rename = "truncB")]
    trunc_b: Option<f64>,
    #[serde(default)]
    corollary: bool,
    #[serde(rename = "cPrime")]
    c_prime: Option<f64>,
}

fn parse_model(mut raw: Value, dim: usize) -> Result<FieldModel, CliError> {
    if let Value::Object(m) = &mut raw {
        m.entry("N").or_insert(json!(dim));
    }
    serde_json::from_value(raw).map_err(|e| CliError::Validation(format!("model: {e}")))
}

fn bound_spec(cfg: &BoundConfig) -> Result<FieldSpec, CliError> {
    if let Some(raw) = &cfg.model {
        if cfg.b.is_some() || cfg.sigma2.is_some() || cfg.mixing.is_some() || cfg.tail.is_some() {
            return Err(CliError::Validation("give either 'model' or B/sigma2/mixing/tail, not both".into()));
        }
        let model = parse_model(raw.clone(), cfg.n.len())?;
        return Ok(field_spec(&model)?);
    }
    let dim = cfg.dim.unwrap_or(cfg.n.len() as u32);
    let sigma2 = cfg.sigma2.ok_or_else(|| CliError::Validation("config: missing key 'sigma2'".into()))?;
    let mixing = cfg.mixing.clone().unwrap_or_else(MixingModel::independent);
    match (cfg.b, cfg.tail) {
        (Some(b), None) => Ok(FieldSpec::bounded(dim, b, sigma2, mixing)?),
        (None, Some(t)) => Ok(FieldSpec::tailed(dim, sigma2, t, mixing)?),
        (Some(_), Some(_)) => Err(CliError::Validation("give either B or tail, not both".into())),
        (None, None) => Err(CliError::Validation("config needs B (bounded field) or tail (unbounded field)".into())),
    }
}

fn scheme_from(n: &[u64], p: &Option<Vec<u64>>, q: &Option<Vec<u64>>) -> Result<(BlockingScheme, Value), CliError> {
    match (p, q) {
        (Some(p), Some(q)) => Ok((make_blocking(n, p, q)?, json!("given"))),
        (None, None) => {
            let d = bounds::default_blocking(n);
            let note = json!({
                "rule": d.rule,
                "followsRule": d.follows_rule,
                "infeasibleAxes": d.infeasible_axes,
            });
            Ok((make_blocking(n, &d.p, &d.q)?, note))
        }
        _ => Err(CliError::Validation("give both P and Q, or neither".into())),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BoundRow {
    eps: f64,
    value: f64,
    log_value: f64,
    mixing_factor: f64,
    exp_factor: f64,
    truncation_term: f64,
    feasible: bool,
    vacuous: bool,
    beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_star: Option<f64>,
    #[serde(rename = "truncB", skip_serializing_if = "Option::is_none")]
    trunc_b: Option<f64>,
    diagnostics: Map<String, Value>,
}

fn finite_or_string(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn bound_row(r: &BoundResult, beta_star: Option<f64>, mut diagnostics: Map<String, Value>) -> BoundRow {
    let s = &r.scheme;
    diagnostics.insert("mixingExponent".into(), json!(r.mixing_exponent));
    diagnostics.insert("expExponent".into(), json!(r.exp_exponent));
    diagnostics.insert("P".into(), json!(s.p()));
    diagnostics.insert("Q".into(), json!(s.q()));
    diagnostics.insert("bigN".into(), json!(s.big_n() as f64));
    diagnostics.insert("bigP".into(), json!(s.big_p() as f64));
    diagnostics.insert("qMin".into(), json!(s.q_min()));
    diagnostics.insert("pMax".into(), json!(s.p_max()));
    diagnostics.insert("kind".into(), json!(r.kind));
    diagnostics.insert("logValue".into(), finite_or_string(r.ln_value()));
    BoundRow {
        eps: r.eps,
        value: r.value,
        log_value: r.ln_value(),
        mixing_factor: r.mixing_factor,
        exp_factor: r.exp_factor,
        truncation_term: r.truncation_term,
        feasible: r.feasible,
        vacuous: r.is_vacuous(),
        beta: r.beta,
        beta_star,
        trunc_b: r.trunc_b,
        diagnostics,
    }
}

fn cmd_bound(args: &ConfigArgs) -> Result<u8, CliError> {
    let map = config::load(args.config.as_deref(), &args.set)?;
    let cfg: BoundConfig = config::typed(map)?;
    let eps_grid = cfg.eps.values();
    if eps_grid.is_empty() {
        return Err(CliError::Usage("eps list is empty".into()));
    }
    if let Some(dim) = cfg.dim {
        if dim as usize != cfg.n.len() {
            return Err(CliError::Validation(format!("N={dim} but n has {} entries", cfg.n.len())));
        }
    }
    let spec = bound_spec(&cfg)?;
    let mut rows = Vec::with_capacity(eps_grid.len());

    if cfg.corollary {
        if cfg.p.is_some() || cfg.q.is_some() || cfg.beta.is_some() {
            return Err(CliError::Validation("corollary mode chooses P, Q and beta itself".into()));
        }
        let c_prime = cfg.c_prime.unwrap_or_else(|| {
            let lo = *cfg.n.iter().min().unwrap_or(&1) as f64;
            let hi = *cfg.n.iter().max().unwrap_or(&1) as f64;
            lo / hi
        });
        for &eps in &eps_grid {
            let c = bounds::corollary_bound(&spec, &cfg.n, eps, c_prime)?;
            let mut d = Map::new();
            d.insert("firstFactorExponent".into(), json!(c.first_factor_exponent));
            d.insert("lnFirstFactorExponent".into(), json!(c.ln_first_factor_exponent));
            d.insert("denominatorSurrogate".into(), json!(c.denominator_surrogate));
            d.insert("beta0".into(), json!(c.beta0));
            rows.push(bound_row(&c.result, Some(c.beta_star), d));
        }
    } else {
        let (scheme, blocking_note) = scheme_from(&cfg.n, &cfg.p, &cfg.q)?;
        for &eps in &eps_grid {
            let mut d = Map::new();
            d.insert("blocking".into(), blocking_note.clone());
            let (result, beta_star) = match (spec.bound(), cfg.beta, cfg.trunc_b) {
                (Some(_), Some(beta), None) => (bounds::bernstein_bound(&spec, &cfg.n, &scheme, beta, eps)?, None),
                (Some(_), None, None) => {
                    let o = bounds::optimize_beta(&spec, &cfg.n, &scheme, eps)?;
                    d.insert("beta0".into(), json!(o.beta0));
                    (o.result, Some(o.beta_star))
                }
                (Some(_), _, Some(_)) => {
                    return Err(CliError::Validation("truncB applies only to fields given by a tail condition".into()))
                }
                (None, Some(beta), Some(tb)) => (bounds::ext_bernstein_bound(&spec, &cfg.n, &scheme, beta, eps, tb)?, None),
                (None, None, Some(tb)) => {
                    let o = bounds::optimize_beta_extended(&spec, &cfg.n, &scheme, eps, tb)?;
                    (o.result, Some(o.beta_star))
                }
                (None, None, None) => {
                    let o = bounds::optimize_truncation(&spec, &cfg.n, &scheme, eps)?;
                    d.insert("truncationGridPoints".into(), json!(o.grid_points));
                    (o.result, Some(o.beta_star))
                }
                (None, Some(_), None) => {
                    return Err(CliError::Validation("a fixed beta for a tailed field also needs truncB".into()))
                }
            };
            rows.push(bound_row(&result, beta_star, d));
        }
    }
    let mut text = serde_json::to_string_pretty(&rows).expect("rows serialise");
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    model: Value,
    #[serde(deserialize_with = "config::one_or_many")]
    n: Vec<u64>,
    eps: Option<EpsList>,
    #[serde(default = "default_reps")]
    reps: u64,
    #[serde(default)]
    seed: u64,
    workers: Option<usize>,
    #[serde(rename = "P", default, deserialize_with = "config::opt_one_or_many")]
    p: Option<Vec<u64>>,
    #[serde(rename = "Q", default, deserialize_with = "config::opt_one_or_many")]
    q: Option<Vec<u64>>,
    out: Option<PathBuf>,
    #[serde(rename = "memoryBudget")]
    memory_budget: Option<u64>,
    #[serde(rename = "scaleBound")]
    scale_bound: Option<f64>,
}

fn default_reps() -> u64 {
    10_000
}

/// Flag, then config, then environment, then all cores.
fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = flag.or(config) {
        return Ok(w);
    }
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        return raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{WORKERS_ENV}='{raw}' is not a worker count")));
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let map = config::load(args.common.config.as_deref(), &args.common.set)?;
    let cfg: VerifyConfig = config::typed(map)?;
    let workers = resolve_workers(args.workers, cfg.workers)?;
    if workers == 0 {
        return Err(CliError::Validation("workers must be >= 1".into()));
    }
    let reps = args.reps.unwrap_or(cfg.reps);
    let seed = args.seed.unwrap_or(cfg.seed);
    let bound_scale = args.scale_bound.or(cfg.scale_bound).unwrap_or(1.0);
    if !(bound_scale > 0.0 && bound_scale.is_finite()) {
        return Err(CliError::Validation(format!("scale-bound must be > 0, got {bound_scale}")));
    }
    let model = parse_model(cfg.model, cfg.n.len())?;
    if model.dim() as usize != cfg.n.len() {
        return Err(CliError::Validation(format!(
            "model has dimension {}, n has {} entries",
            model.dim(),
            cfg.n.len()
        )));
    }
    let scheme = match (&cfg.p, &cfg.q) {
        (Some(p), Some(q)) => make_blocking(&cfg.n, p, q)?,
        (None, None) => montecarlo::auto_blocking(&model, &cfg.n)?,
        _ => return Err(CliError::Validation("give both P and Q, or neither".into())),
    };
    let grid = match &cfg.eps {
        Some(list) => {
            let g = list.values();
            if g.is_empty() {
                return Err(CliError::Usage("eps list is empty".into()));
            }
            g
        }
        None => montecarlo::default_eps_grid(&model, &cfg.n, &scheme)?,
    };
    let opts = TailOptions {
        workers,
        blocking: Some(scheme),
        bound_scale,
        memory_budget: cfg.memory_budget.unwrap_or(montecarlo::DEFAULT_MEMORY_BUDGET),
    };
    let experiment = montecarlo::estimate_tail_with(&model, &cfg.n, &grid, reps, seed, &opts)?;
    let report = montecarlo::verify(&experiment);
    let out = args.common.out.clone().or(cfg.out);
    emit(out.as_deref(), &report.to_csv())?;
    if out.is_some() {
        print!("{}", report.to_table());
    } else {
        eprintln!("{}", report.summary());
    }
    Ok(if report.passed() { 0 } else { 1 })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphaConfig {
    model: Value,
    #[serde(rename = "I")]
    i: Vec<Vec<i64>>,
    #[serde(rename = "J")]
    j: Vec<Vec<i64>>,
    #[serde(default = "default_reps")]
    reps: u64,
    #[serde(default)]
    seed: u64,
    levels: Option<Vec<f64>>,
}

fn cmd_estimate_alpha(args: &ConfigArgs) -> Result<u8, CliError> {
    let map = config::load(args.config.as_deref(), &args.set)?;
    let cfg: AlphaConfig = config::typed(map)?;
    let dim = cfg.i.first().map_or(1, Vec::len);
    let model = parse_model(cfg.model, dim)?;
    if cfg.i.is_empty() || cfg.j.is_empty() {
        return Err(CliError::Validation("I and J must be nonempty point lists".into()));
    }
    if cfg.reps == 0 {
        return Err(CliError::Validation("reps must be >= 1".into()));
    }
    let spec = field_spec(&model)?;
    // d_inf between finite point sets: minimum over pairs
    let mut distance = u64::MAX;
    for s in &cfg.i {
        for t in &cfg.j {
            distance = distance.min(d_inf(s, t)?);
        }
    }
    let events = match cfg.levels {
        Some(l) => ThresholdEvents::new(l)?,
        None => ThresholdEvents::default(),
    };
    let mut si = Vec::with_capacity(cfg.reps as usize);
    let mut sj = Vec::with_capacity(cfg.reps as usize);
    for r in 0..cfg.reps {
        let s = fields::stream_seed(cfg.seed, r);
        si.push(fields::sample_points(&model, &cfg.i, s)?);
        sj.push(fields::sample_points(&model, &cfg.j, s)?);
    }
    let lower = estimate_alpha_lower(&si, &sj, &events)?;
    let declared = spec.mixing().alpha(distance);
    let out = json!({
        "alphaLower": lower,
        "declaredAlpha": declared,
        "distance": distance,
        "reps": cfg.reps,
        "consistent": lower <= declared + montecarlo::ci_half_width(declared.min(1.0), cfg.reps),
        "cap": mixing::ALPHA_CAP,
    });
    emit(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&out).expect("serialise")))?;
    Ok(0)
}

fn cmd_davydov(args: &DavydovArgs) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&args.table).map_err(|e| CliError::Io(format!("{}: {e}", args.table.display())))?;
    let table = JointTable::parse(&text)?;
    let check = mixing::davydov_check(&table, args.p, args.q, args.r)?;
    let out = json!({
        "covariance": table.covariance(),
        "lhs": check.lhs,
        "alpha": check.alpha,
        "rhs": check.rhs,
        "holds": check.holds,
    });
    emit(None, &format!("{}\n", serde_json::to_string_pretty(&out).expect("serialise")))?;
    Ok(if check.holds { 0 } else { 1 })
}
