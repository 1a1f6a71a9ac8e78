//! Replicated tail estimates paired with tuned bounds.
//!
//! Replication `r` draws its field from stream `stream_seed(seed, r)`, so every
//! sum is a pure function of `(model, n, seed, r)` and the counts do not depend
//! on how replications are spread over workers.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundError, BoundResult, FieldSpec};
use crate::fields::{self, field_spec, FieldError, FieldModel};
use crate::lattice::{make_blocking, BlockingScheme, LatticeBox, LatticeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("need at least {min} replications, got {got}")]
    TooFewReps { min: u64, got: u64 },
    #[error("eps grid must be nonempty, positive and ascending")]
    BadGrid,
    #[error("worker count must be >= 1")]
    NoWorkers,
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub type Result<T> = std::result::Result<T, MonteCarloError>;

pub const MIN_REPS: u64 = 100;

/// Default memory budget for per-worker field buffers.
pub const DEFAULT_MEMORY_BUDGET: u64 = 512 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TailOptions {
    pub workers: usize,
    /// Overrides the automatic blocking.
    pub blocking: Option<BlockingScheme>,
    /// Multiplies every bound before comparison; anything but 1 is a checker
    /// self-test.
    pub bound_scale: f64,
    /// Bytes allowed for `n * 8`-byte field buffers across all workers; above
    /// it sums are streamed point by point.
    pub memory_budget: u64,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            blocking: None,
            bound_scale: 1.0,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailRecord {
    pub eps: f64,
    pub exceedances: u64,
    pub empirical: f64,
    pub ci_half_width: f64,
    /// Bound value after `bound_scale`.
    pub bound_value: f64,
    pub bound: BoundResult,
    pub beta_star: f64,
    pub trunc_b: Option<f64>,
    pub verified: bool,
}

impl TailRecord {
    pub fn slack(&self) -> f64 {
        self.bound_value - self.empirical
    }

    pub fn is_vacuous(&self) -> bool {
        self.bound_value >= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailExperiment {
    pub model: FieldModel,
    pub n: Vec<u64>,
    pub eps_grid: Vec<f64>,
    pub reps: u64,
    pub seed: u64,
    pub scheme: BlockingScheme,
    pub streamed: bool,
    pub records: Vec<TailRecord>,
}

/// `3 sqrt(p (1 - p) / reps) + 3 / reps`.
pub fn ci_half_width(p_hat: f64, reps: u64) -> f64 {
    let r = reps as f64;
    3.0 * (p_hat * (1.0 - p_hat) / r).sqrt() + 3.0 / r
}

/// `P = Q = dependence range + 1` per axis, so same-type blocks are farther
/// apart than the dependence range. Falls back to the quarter-side rule when
/// that does not fit.
pub fn auto_blocking(model: &FieldModel, n: &[u64]) -> Result<BlockingScheme> {
    let len = model.dependence_range() + 1;
    if n.iter().all(|&ni| 2 * len < ni) {
        return Ok(make_blocking(n, &vec![len; n.len()], &vec![len; n.len()])?);
    }
    let d = bounds::default_blocking(n);
    let fallback: Vec<u64> = n.iter().map(|ni| (ni / 4).max(1)).collect();
    let (p, q) = if d.follows_rule { (d.p, d.q) } else { (fallback.clone(), fallback) };
    Ok(make_blocking(n, &p, &q)?)
}

/// Bounded bound with `beta` tuned, or truncated bound with level and `beta`
/// tuned, whichever the field description supports.
pub fn tuned_bound(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme, eps: f64) -> Result<bounds::TunedBound> {
    Ok(bounds::tuned_bound(spec, n, scheme, eps)?)
}

/// Eight log-spaced points from `sigma sqrt(n)` to the first `eps` at which
/// the tuned bound drops below `1e-6`.
pub fn default_eps_grid(model: &FieldModel, n: &[u64], scheme: &BlockingScheme) -> Result<Vec<f64>> {
    let spec = field_spec(model)?;
    let big_n: f64 = n.iter().map(|&v| v as f64).product();
    let sigma = spec.sigma2().sqrt();
    let lo = if sigma > 0.0 { sigma * big_n.sqrt() } else { 1.0 };
    let below = |eps: f64| -> Result<bool> { Ok(tuned_bound(&spec, n, scheme, eps)?.result.value < 1e-6) };
    let mut hi = lo;
    let mut steps = 0;
    while !below(hi)? {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(MonteCarloError::BadGrid);
        }
    }
    if steps > 0 {
        let mut a = hi / 2.0;
        while (hi - a) > 1e-6 * hi {
            let mid = 0.5 * (a + hi);
            if below(mid)? {
                hi = mid;
            } else {
                a = mid;
            }
        }
    } else {
        hi = 2.0 * lo;
    }
    Ok((0..8)
        .map(|i| lo * (hi / lo).powf(i as f64 / 7.0))
        .collect())
}

fn check_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty()
        || eps_grid.iter().any(|e| !(*e > 0.0 && e.is_finite()))
        || eps_grid.windows(2).any(|w| w[1] < w[0])
    {
        return Err(MonteCarloError::BadGrid);
    }
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(MonteCarloError::NoWorkers);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| MonteCarloError::Pool(e.to_string()))
}

/// `S_n` for replications `0..reps`, in replication order.
pub fn replicate_sums(model: &FieldModel, n: &[u64], reps: u64, seed: u64, workers: usize, streaming: bool) -> Result<Vec<f64>> {
    let domain = LatticeBox::cube(n)?;
    // surface model errors once, before fanning out
    fields::field_sum(model, &LatticeBox::cube(&vec![1; n.len()])?, seed, true)?;
    let pool = pool(workers)?;
    let sums = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| fields::field_sum(model, &domain, fields::stream_seed(seed, r), streaming).expect("model validated above"))
            .collect()
    });
    Ok(sums)
}

pub fn estimate_tail(model: &FieldModel, n: &[u64], eps_grid: &[f64], reps: u64, seed: u64, workers: usize) -> Result<TailExperiment> {
    estimate_tail_with(
        model,
        n,
        eps_grid,
        reps,
        seed,
        &TailOptions {
            workers,
            ..TailOptions::default()
        },
    )
}

pub fn estimate_tail_with(
    model: &FieldModel,
    n: &[u64],
    eps_grid: &[f64],
    reps: u64,
    seed: u64,
    opts: &TailOptions,
) -> Result<TailExperiment> {
    if reps < MIN_REPS {
        return Err(MonteCarloError::TooFewReps { min: MIN_REPS, got: reps });
    }
    check_grid(eps_grid)?;
    let spec = field_spec(model)?;
    let scheme = match &opts.blocking {
        Some(s) => s.clone(),
        None => auto_blocking(model, n)?,
    };
    let big_n: u64 = n.iter().product();
    let streamed = big_n.saturating_mul(8).saturating_mul(opts.workers as u64) > opts.memory_budget;
    let sums = replicate_sums(model, n, reps, seed, opts.workers, streamed)?;

    let mut records = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let exceedances = sums.iter().filter(|s| s.abs() >= eps).count() as u64;
        let empirical = exceedances as f64 / reps as f64;
        let ci = ci_half_width(empirical, reps);
        let tuned = tuned_bound(&spec, n, &scheme, eps)?;
        let bound_value = tuned.result.value * opts.bound_scale;
        records.push(TailRecord {
            eps,
            exceedances,
            empirical,
            ci_half_width: ci,
            bound_value,
            verified: bound_value >= 1.0 || empirical - ci <= bound_value,
            bound: tuned.result,
            beta_star: tuned.beta_star,
            trunc_b: tuned.trunc_b,
        });
    }
    Ok(TailExperiment {
        model: model.clone(),
        n: n.to_vec(),
        eps_grid: eps_grid.to_vec(),
        reps,
        seed,
        scheme,
        streamed,
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub rows: Vec<TailRecord>,
    pub reps: u64,
}

pub const CSV_HEADER: &str = "eps,empirical,ci,bound,mixingFactor,expFactor,truncationTerm,betaStar,verified";

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verified)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.verified).count()
    }

    pub fn vacuous(&self) -> usize {
        self.rows.iter().filter(|r| r.is_vacuous()).count()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}/{} verified, {} vacuous, reps={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.rows.len() - self.failures(),
            self.rows.len(),
            self.vacuous(),
            self.reps
        )
    }

    /// CSV rows followed by a `# summary:` comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.eps,
                r.empirical,
                r.ci_half_width,
                r.bound_value,
                r.bound.mixing_factor,
                r.bound.exp_factor,
                r.bound.truncation_term,
                r.beta_star,
                r.verified
            );
        }
        let _ = writeln!(out, "# summary: {}", self.summary());
        out
    }

    /// Human-readable table including the slack column.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>12} {:>10} {:>10} {:>12} {:>12}  status",
            "eps", "empirical", "ci", "bound", "slack"
        );
        for r in &self.rows {
            let status = match (r.verified, r.is_vacuous()) {
                (true, true) => "ok (vacuous)",
                (true, false) => "ok",
                (false, _) => "VIOLATED",
            };
            let _ = writeln!(
                out,
                "{:>12.4} {:>10.6} {:>10.6} {:>12.4e} {:>12.4e}  {status}",
                r.eps,
                r.empirical,
                r.ci_half_width,
                r.bound_value,
                r.slack()
            );
        }
        out.push_str(&self.summary());
        out.push('\n');
        out
    }
}

pub fn verify(experiment: &TailExperiment) -> VerificationReport {
    VerificationReport {
        rows: experiment.records.clone(),
        reps: experiment.reps,
    }
}
