//! Evaluation and tuning of the lattice Bernstein bounds.
//!
//! For a zero-mean field on `I_n` with `|Z(s)| <= B`, `Var Z(s) <= sigma^2`
//! and mixing coefficients `alpha(k)`, a blocking `(P, Q)` and
//! `0 < beta < 1 / (2^(N+1) B P e)`:
//!
//! ```text
//! P(|S_n| >= eps) <= 2 exp{ 12 sqrt(e) 2^N (n/P) alpha(q)^(P / [n (2^N + 1)]) }
//!                    * exp{ -beta eps + 2^(3N) beta^2 e (sigma^2 + 12 B^2 gamma alpha_bar(p)) n }
//! ```
//!
//! with `n = |I_n|`, `P = prod P_k`, `q = min Q_k`, `p = max P_k` and
//! `gamma = 3^N - 1`. The first exponential is the mixing factor, the second
//! the exponential factor.
//!
//! For unbounded fields with `P(|Z(s)| >= z) <= k0 exp(-k1 z^tau)` the field is
//! truncated at an arbitrary level `B`; the excess contributes
//! `(12 / (eps tau)) k0 k1^(-1/tau) Gamma(1/tau, k1 B^tau) n`, and the clipped
//! part uses the bounded result at `eps / 3` with `2B` in place of `B`.

mod gamma;
mod search;

pub use gamma::{gamma, ln_gamma, ln_upper_incomplete_gamma, upper_incomplete_gamma};
pub use search::golden_section;

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{make_blocking, BlockingScheme, LatticeError};
use crate::mixing::{alpha_bar, gamma_min, MixingModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid field description: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} needs a uniformly bounded field (B)")]
    NeedsBound(&'static str),
    #[error("{0} needs a tail condition (kappa0, kappa1, tau)")]
    NeedsTail(&'static str),
    #[error("blocking scheme was built for n={scheme:?}, bound requested for n={n:?}")]
    SchemeMismatch { scheme: Vec<u64>, n: Vec<u64> },
    #[error("corollary bound needs exponentially decreasing mixing coefficients")]
    NotExponential,
    #[error("corollary precondition violated: {0}")]
    Precondition(String),
    #[error("asymptotic regime not reached at n={n:?}: blocking rule gives P=Q={rule:?}, and 2P >= n on axes {axes:?}")]
    AsymptoticRegime {
        n: Vec<u64>,
        rule: Vec<u64>,
        axes: Vec<usize>,
    },
}

pub type Result<T> = std::result::Result<T, BoundError>;

/// Values below this are flushed to zero when raising `alpha(q)` to a power.
const UNDERFLOW: f64 = 1e-300;

/// Uniform tail condition `P(|Z(s)| >= z) <= kappa0 exp(-kappa1 z^tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub kappa0: f64,
    pub kappa1: f64,
    pub tau: f64,
}

impl TailParams {
    pub fn new(kappa0: f64, kappa1: f64, tau: f64) -> Result<Self> {
        let t = Self { kappa0, kappa1, tau };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa0", self.kappa0), ("kappa1", self.kappa1), ("tau", self.tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BoundError::InvalidSpec(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// What the bounds need to know about a field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    dim: u32,
    bound: Option<f64>,
    sigma2: f64,
    tail: Option<TailParams>,
    mixing: MixingModel,
}

impl FieldSpec {
    /// `|Z(s)| <= bound`, `Var Z(s) <= sigma2`.
    pub fn bounded(dim: u32, bound: f64, sigma2: f64, mixing: MixingModel) -> Result<Self> {
        if dim == 0 {
            return Err(BoundError::InvalidSpec("dimension must be at least 1".into()));
        }
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(BoundError::InvalidSpec(format!("B must be finite and >= 0, got {bound}")));
        }
        check_sigma2(sigma2)?;
        if sigma2 > bound * bound * (1.0 + 1e-12) {
            return Err(BoundError::InvalidSpec(format!(
                "sigma2={sigma2} exceeds B^2={}",
                bound * bound
            )));
        }
        Ok(Self {
            dim,
            bound: Some(bound),
            sigma2,
            tail: None,
            mixing,
        })
    }

    /// Unbounded field with a uniform tail condition.
    pub fn tailed(dim: u32, sigma2: f64, tail: TailParams, mixing: MixingModel) -> Result<Self> {
        if dim == 0 {
            return Err(BoundError::InvalidSpec("dimension must be at least 1".into()));
        }
        check_sigma2(sigma2)?;
        tail.validate()?;
        Ok(Self {
            dim,
            bound: None,
            sigma2,
            tail: Some(tail),
            mixing,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }
    pub fn bound(&self) -> Option<f64> {
        self.bound
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn tail(&self) -> Option<TailParams> {
        self.tail
    }
    pub fn mixing(&self) -> &MixingModel {
        &self.mixing
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(BoundError::InvalidSpec(format!("sigma2 must be finite and >= 0, got {sigma2}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// Bounded field.
    Bernstein,
    /// Tail condition plus truncation.
    Extended,
}

/// An evaluated bound on `P(|S_n| >= eps)` and its pieces.
///
/// `value = 2 * mixing_factor * exp_factor + truncation_term` when feasible;
/// the product is formed in log space so that an overflowing mixing factor
/// against an underflowing exponential factor still yields the right value.
/// Bounds above 1 are returned as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub kind: BoundKind,
    pub value: f64,
    pub mixing_exponent: f64,
    pub mixing_factor: f64,
    pub exp_exponent: f64,
    pub exp_factor: f64,
    pub truncation_term: f64,
    pub feasible: bool,
    pub eps: f64,
    pub beta: f64,
    pub trunc_b: Option<f64>,
    pub scheme: BlockingScheme,
}

impl BoundResult {
    pub fn is_vacuous(&self) -> bool {
        self.value >= 1.0
    }

    pub fn ln_value(&self) -> f64 {
        self.value.ln()
    }
}

/// `2^(N+1) * B_eff * P * e * beta < 1`, written as `beta < beta_limit`.
struct Terms {
    kind: BoundKind,
    mixing_exponent: f64,
    quad: f64,
    beta_limit: f64,
    eps_weight: f64,
    truncation_term: f64,
    trunc_b: Option<f64>,
}

/// First-factor exponent `12 sqrt(e) 2^N (n/P) alpha(q)^(P / [n (2^N + 1)])`
/// and its natural log.
pub fn mixing_exponent(mixing: &MixingModel, scheme: &BlockingScheme) -> (f64, f64) {
    let dim = scheme.dim() as i32;
    let two_n = 2f64.powi(dim);
    let (big_n, big_p) = (scheme.big_n() as f64, scheme.big_p() as f64);
    let ln_prefactor = (12.0 * E.sqrt() * two_n * big_n / big_p).ln();
    let power = big_p / (big_n * (two_n + 1.0));
    let ln_alpha_pow = power * mixing.ln_alpha(scheme.q_min());
    let alpha_pow = ln_alpha_pow.exp();
    let ln_exponent = ln_prefactor + ln_alpha_pow;
    if alpha_pow < UNDERFLOW {
        (0.0, ln_exponent)
    } else {
        (ln_prefactor.exp() * alpha_pow, ln_exponent)
    }
}

fn ensure_scheme(n: &[u64], scheme: &BlockingScheme, dim: u32) -> Result<()> {
    if scheme.n() != n || n.len() != dim as usize {
        return Err(BoundError::SchemeMismatch {
            scheme: scheme.n().to_vec(),
            n: n.to_vec(),
        });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(BoundError::InvalidArgument(format!("eps must be finite and >= 0, got {eps}")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(BoundError::InvalidArgument(format!("beta must be finite and > 0, got {beta}")));
    }
    Ok(())
}

/// `effective_b` is the almost-sure bound of the summands; `cov_factor * b^2`
/// is the covariance constant in front of `gamma * alpha_bar`.
fn core_terms(spec: &FieldSpec, scheme: &BlockingScheme, effective_b: f64, cov_b2: f64) -> (f64, f64, f64) {
    let dim = spec.dim as i32;
    let gamma = gamma_min(spec.dim);
    let abar = alpha_bar(&spec.mixing, scheme.p_max(), spec.dim);
    let variance = spec.sigma2 + cov_b2 * gamma * abar;
    let quad = 2f64.powi(3 * dim) * E * variance * scheme.big_n() as f64;
    let coef = 2f64.powi(dim + 1) * effective_b * scheme.big_p() as f64 * E;
    let beta_limit = if coef > 0.0 { 1.0 / coef } else { f64::INFINITY };
    let (mix, _) = mixing_exponent(&spec.mixing, scheme);
    (mix, quad, beta_limit)
}

fn bernstein_terms(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme) -> Result<Terms> {
    let b = spec.bound.ok_or(BoundError::NeedsBound("bounded Bernstein bound"))?;
    ensure_scheme(n, scheme, spec.dim)?;
    let (mixing_exponent, quad, beta_limit) = core_terms(spec, scheme, b, 12.0 * b * b);
    Ok(Terms {
        kind: BoundKind::Bernstein,
        mixing_exponent,
        quad,
        beta_limit,
        eps_weight: 1.0,
        truncation_term: 0.0,
        trunc_b: None,
    })
}

fn extended_terms(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme, eps: f64, trunc_b: f64) -> Result<Terms> {
    let tail = spec.tail.ok_or(BoundError::NeedsTail("extended Bernstein bound"))?;
    ensure_scheme(n, scheme, spec.dim)?;
    if !(trunc_b > 0.0 && trunc_b.is_finite()) {
        return Err(BoundError::InvalidArgument(format!("truncation level must be > 0, got {trunc_b}")));
    }
    // clipped parts satisfy |Z0 - E Z0| <= 2B, hence 12 (2B)^2 = 48 B^2
    let (mixing_exponent, quad, beta_limit) = core_terms(spec, scheme, 2.0 * trunc_b, 48.0 * trunc_b * trunc_b);
    let ln_tail = ln_tail_integral(&tail, trunc_b)?;
    let truncation_term = (12.0 / eps * ln_tail.exp_ln_scale() * scheme.big_n() as f64).max(0.0);
    Ok(Terms {
        kind: BoundKind::Extended,
        mixing_exponent,
        quad,
        beta_limit,
        eps_weight: 1.0 / 3.0,
        truncation_term,
        trunc_b: Some(trunc_b),
    })
}

/// `ln` of `int_B^inf kappa0 exp(-kappa1 z^tau) dz`, kept as a log to survive
/// deep tails.
struct LnValue(f64);

impl LnValue {
    fn exp_ln_scale(&self) -> f64 {
        self.0.exp()
    }
}

fn ln_tail_integral(tail: &TailParams, b: f64) -> Result<LnValue> {
    let a = 1.0 / tail.tau;
    let ln_gamma_term = ln_upper_incomplete_gamma(a, tail.kappa1 * b.powf(tail.tau))?;
    Ok(LnValue(
        tail.kappa0.ln() - tail.tau.ln() - a * tail.kappa1.ln() + ln_gamma_term,
    ))
}

/// `int_B^inf kappa0 exp(-kappa1 z^tau) dz = (kappa0 / tau) kappa1^(-1/tau) Gamma(1/tau, kappa1 B^tau)`.
pub fn tail_integral(tail: &TailParams, b: f64) -> Result<f64> {
    tail.validate()?;
    if b.is_nan() || b < 0.0 {
        return Err(BoundError::InvalidArgument(format!("B must be >= 0, got {b}")));
    }
    Ok(ln_tail_integral(tail, b)?.exp_ln_scale())
}

/// Split `z` at level `b > 0` into upper excess, lower excess and clipped part:
/// `z = upper + lower + clipped` with `upper >= 0`, `lower <= 0`, `|clipped| <= b`.
pub fn truncation_split(z: f64, b: f64) -> (f64, f64, f64) {
    let upper = z - z.min(b);
    let lower = z - z.max(-b);
    let clipped = z.min(b).max(-b);
    (upper, lower, clipped)
}

fn evaluate(terms: &Terms, scheme: &BlockingScheme, beta: f64, eps: f64) -> BoundResult {
    let exp_exponent = -terms.eps_weight * beta * eps + terms.quad * beta * beta;
    let feasible = beta < terms.beta_limit;
    let value = if feasible {
        (2f64.ln() + terms.mixing_exponent + exp_exponent).exp() + terms.truncation_term
    } else {
        f64::INFINITY
    };
    BoundResult {
        kind: terms.kind,
        value,
        mixing_exponent: terms.mixing_exponent,
        mixing_factor: terms.mixing_exponent.exp(),
        exp_exponent,
        exp_factor: exp_exponent.exp(),
        truncation_term: terms.truncation_term,
        feasible,
        eps,
        beta,
        trunc_b: terms.trunc_b,
        scheme: scheme.clone(),
    }
}

/// The bounded-field bound at a given `beta`. Infeasible `beta` gives
/// `feasible = false` and `value = +inf`.
pub fn bernstein_bound(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme, beta: f64, eps: f64) -> Result<BoundResult> {
    check_eps(eps)?;
    check_beta(beta)?;
    let terms = bernstein_terms(spec, n, scheme)?;
    Ok(evaluate(&terms, scheme, beta, eps))
}

/// Truncated bound for a field with a tail condition, at level `trunc_b`.
pub fn ext_bernstein_bound(
    spec: &FieldSpec,
    n: &[u64],
    scheme: &BlockingScheme,
    beta: f64,
    eps: f64,
    trunc_b: f64,
) -> Result<BoundResult> {
    check_eps(eps)?;
    check_beta(beta)?;
    let terms = extended_terms(spec, n, scheme, eps, trunc_b)?;
    Ok(evaluate(&terms, scheme, beta, eps))
}

/// Supremum of admissible `beta` (exclusive) for the bounded bound.
pub fn beta_limit(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme) -> Result<f64> {
    Ok(bernstein_terms(spec, n, scheme)?.beta_limit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaOptimum {
    pub beta_star: f64,
    /// `eps' / (2 * 2^(3N) e V n + eps' / beta_limit)` with `eps'` the
    /// effective deviation; a closed-form near-minimiser for cross-checks.
    pub beta0: f64,
    pub result: BoundResult,
}

const BETA_REL_TOL: f64 = 1e-9;
const GOLDEN_MAX_ITER: usize = 400;

fn minimise_beta(terms: &Terms, scheme: &BlockingScheme, eps: f64) -> BetaOptimum {
    let weighted = terms.eps_weight * eps;
    let hi = if terms.beta_limit.is_finite() {
        terms.beta_limit * (1.0 - 1e-12)
    } else if terms.quad > 0.0 {
        weighted / terms.quad
    } else if weighted > 0.0 {
        // exponent -weighted * beta only; push it far below underflow
        800.0 / weighted
    } else {
        1.0
    };
    let hi = if hi > 0.0 { hi } else { terms.beta_limit.min(1.0) * 0.5 };
    let objective = |beta: f64| -weighted * beta + terms.quad * beta * beta;
    let (beta_star, _) = golden_section(objective, 0.0, hi, BETA_REL_TOL, GOLDEN_MAX_ITER);
    let limit_term = if terms.beta_limit.is_finite() {
        weighted / terms.beta_limit
    } else {
        0.0
    };
    let denom = 2.0 * terms.quad + limit_term;
    let beta0 = if denom > 0.0 { weighted / denom } else { 0.0 };
    BetaOptimum {
        beta_star,
        beta0,
        result: evaluate(terms, scheme, beta_star, eps),
    }
}

/// Minimise the bounded bound over admissible `beta` by golden-section search.
pub fn optimize_beta(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme, eps: f64) -> Result<BetaOptimum> {
    check_eps(eps)?;
    let terms = bernstein_terms(spec, n, scheme)?;
    Ok(minimise_beta(&terms, scheme, eps))
}

/// Minimise the truncated bound over `beta` at a fixed truncation level.
pub fn optimize_beta_extended(
    spec: &FieldSpec,
    n: &[u64],
    scheme: &BlockingScheme,
    eps: f64,
    trunc_b: f64,
) -> Result<BetaOptimum> {
    check_eps(eps)?;
    let terms = extended_terms(spec, n, scheme, eps, trunc_b)?;
    Ok(minimise_beta(&terms, scheme, eps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationOptimum {
    pub trunc_b: f64,
    pub beta_star: f64,
    pub result: BoundResult,
    pub grid_points: usize,
}

/// Grid search over `B = sigma * 2^j`, `j = 0..=30`, with an inner `beta` search.
pub fn optimize_truncation(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme, eps: f64) -> Result<TruncationOptimum> {
    optimize_truncation_on_grid(spec, n, scheme, eps, 1)
}

/// As [`optimize_truncation`] with `per_octave` grid points per doubling:
/// `B = sigma * 2^(k / per_octave)`, `k = 0..=30 * per_octave`. Every coarser
/// grid whose resolution divides `per_octave` is a subset.
pub fn optimize_truncation_on_grid(
    spec: &FieldSpec,
    n: &[u64],
    scheme: &BlockingScheme,
    eps: f64,
    per_octave: u32,
) -> Result<TruncationOptimum> {
    if per_octave == 0 {
        return Err(BoundError::InvalidArgument("per_octave must be >= 1".into()));
    }
    let sigma = if spec.sigma2 > 0.0 { spec.sigma2.sqrt() } else { 1.0 };
    let mut best: Option<TruncationOptimum> = None;
    let points = 30 * per_octave + 1;
    for k in 0..points {
        let trunc_b = sigma * 2f64.powf(k as f64 / per_octave as f64);
        let opt = optimize_beta_extended(spec, n, scheme, eps, trunc_b)?;
        if best.as_ref().is_none_or(|b| opt.result.value < b.result.value) {
            best = Some(TruncationOptimum {
                trunc_b,
                beta_star: opt.beta_star,
                result: opt.result,
                grid_points: points as usize,
            });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// A tuned bound for whatever the field description supports: the bounded
/// bound when `B` is known, the truncated one when only a tail is.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedBound {
    pub beta_star: f64,
    pub trunc_b: Option<f64>,
    pub result: BoundResult,
}

pub fn tuned_bound(spec: &FieldSpec, n: &[u64], scheme: &BlockingScheme, eps: f64) -> Result<TunedBound> {
    if spec.bound.is_some() {
        let opt = optimize_beta(spec, n, scheme, eps)?;
        Ok(TunedBound {
            beta_star: opt.beta_star,
            trunc_b: None,
            result: opt.result,
        })
    } else {
        let opt = optimize_truncation(spec, n, scheme, eps)?;
        Ok(TunedBound {
            beta_star: opt.beta_star,
            trunc_b: Some(opt.trunc_b),
            result: opt.result,
        })
    }
}

/// Block lengths from the rule `P_i = Q_i = floor(n_i^(N/(N+1)) ln n_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefaultBlocking {
    pub p: Vec<u64>,
    pub q: Vec<u64>,
    /// Rule values, whether or not they are admissible.
    pub rule: Vec<u64>,
    /// 1-based axes where the rule violates `2 P_i < n_i` (or gives 0).
    pub infeasible_axes: Vec<usize>,
    /// `false` when `p`, `q` are the fallback `max(1, floor(n_i / 4))`.
    pub follows_rule: bool,
}

pub fn default_blocking(n: &[u64]) -> DefaultBlocking {
    let dim = n.len() as f64;
    let rule: Vec<u64> = n
        .iter()
        .map(|&ni| {
            let x = ni as f64;
            (x.powf(dim / (dim + 1.0)) * x.ln()).floor() as u64
        })
        .collect();
    let infeasible_axes: Vec<usize> = rule
        .iter()
        .zip(n)
        .enumerate()
        .filter(|(_, (p, ni))| **p == 0 || 2 * **p >= **ni)
        .map(|(k, _)| k + 1)
        .collect();
    if infeasible_axes.is_empty() {
        DefaultBlocking {
            p: rule.clone(),
            q: rule.clone(),
            rule,
            infeasible_axes,
            follows_rule: true,
        }
    } else {
        let fallback: Vec<u64> = n.iter().map(|ni| (ni / 4).max(1)).collect();
        DefaultBlocking {
            p: fallback.clone(),
            q: fallback,
            rule,
            infeasible_axes,
            follows_rule: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryBound {
    pub beta_star: f64,
    pub beta0: f64,
    pub result: BoundResult,
    /// The mixing-factor exponent (bounded uniformly in `n` in this regime).
    pub first_factor_exponent: f64,
    pub ln_first_factor_exponent: f64,
    /// `(sigma^2 + B^2) n + B eps n^(N/(N+1)) prod ln n_i`.
    pub denominator_surrogate: f64,
}

/// The bounded bound under exponential mixing with the rule-based blocking
/// and optimised `beta`, plus shape diagnostics.
///
/// Requires `min n_i >= 8 (= ceil(e^2))` and `min n_i / max n_i >= c_prime`.
pub fn corollary_bound(spec: &FieldSpec, n: &[u64], eps: f64, c_prime: f64) -> Result<CorollaryBound> {
    let b = spec.bound.ok_or(BoundError::NeedsBound("corollary bound"))?;
    if !matches!(spec.mixing, MixingModel::Exponential { .. }) {
        return Err(BoundError::NotExponential);
    }
    if n.len() != spec.dim as usize {
        return Err(BoundError::InvalidArgument(format!(
            "n has {} axes, field has dimension {}",
            n.len(),
            spec.dim
        )));
    }
    if c_prime.is_nan() || c_prime <= 0.0 {
        return Err(BoundError::InvalidArgument(format!("C' must be > 0, got {c_prime}")));
    }
    let (lo, hi) = (*n.iter().min().expect("nonempty"), *n.iter().max().expect("nonempty"));
    let min_side = (E * E).ceil() as u64;
    if lo < min_side {
        return Err(BoundError::Precondition(format!("min n_i = {lo} < {min_side} (e^2)")));
    }
    if (lo as f64) / (hi as f64) < c_prime {
        return Err(BoundError::Precondition(format!(
            "min n_i / max n_i = {} < C' = {c_prime}",
            lo as f64 / hi as f64
        )));
    }
    let blocking = default_blocking(n);
    if !blocking.follows_rule {
        return Err(BoundError::AsymptoticRegime {
            n: n.to_vec(),
            rule: blocking.rule,
            axes: blocking.infeasible_axes,
        });
    }
    let scheme = make_blocking(n, &blocking.p, &blocking.q)?;
    let opt = optimize_beta(spec, n, &scheme, eps)?;
    let (first, ln_first) = mixing_exponent(&spec.mixing, &scheme);
    let big_n = scheme.big_n() as f64;
    let dim = spec.dim as f64;
    let log_product: f64 = n.iter().map(|&ni| (ni as f64).ln()).product();
    let denominator_surrogate =
        (spec.sigma2 + b * b) * big_n + b * eps * big_n.powf(dim / (dim + 1.0)) * log_product;
    Ok(CorollaryBound {
        beta_star: opt.beta_star,
        beta0: opt.beta0,
        result: opt.result,
        first_factor_exponent: first,
        ln_first_factor_exponent: ln_first,
        denominator_surrogate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iid_spec() -> FieldSpec {
        FieldSpec::bounded(1, 1.0, 1.0, MixingModel::independent()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn iid_fixed_beta_example() {
        let scheme = make_blocking(&[1000], &[10], &[10]).unwrap();
        let r = bernstein_bound(&iid_spec(), &[1000], &scheme, 0.001, 200.0).unwrap();
        assert_eq!(r.mixing_exponent, 0.0);
        assert_eq!(r.mixing_factor, 1.0);
        let expected = 2.0 * (-0.2 + 8.0 * E * 1e-6 * 1000.0f64).exp();
        assert!(rel(r.value, expected) < 1e-14);
        assert!((r.value - 1.6735).abs() < 1e-4);
        assert!(r.feasible && r.is_vacuous());
    }

    #[test]
    fn zero_eps_is_vacuous() {
        let scheme = make_blocking(&[1000], &[10], &[10]).unwrap();
        let r = bernstein_bound(&iid_spec(), &[1000], &scheme, 0.001, 0.0).unwrap();
        assert!(r.feasible && r.value >= 2.0 * r.mixing_factor);
    }

    #[test]
    fn beta_at_the_limit_is_infeasible() {
        let scheme = make_blocking(&[1000], &[10], &[10]).unwrap();
        let limit = beta_limit(&iid_spec(), &[1000], &scheme).unwrap();
        assert!(rel(limit, 1.0 / (4.0 * 10.0 * E)) < 1e-15);
        let r = bernstein_bound(&iid_spec(), &[1000], &scheme, limit, 200.0).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.value, f64::INFINITY);
        assert!(bernstein_bound(&iid_spec(), &[1000], &scheme, limit * (1.0 - 1e-9), 200.0).unwrap().feasible);
    }

    #[test]
    fn iid_optimum_matches_closed_form() {
        let scheme = make_blocking(&[1000], &[10], &[10]).unwrap();
        let opt = optimize_beta(&iid_spec(), &[1000], &scheme, 200.0).unwrap();
        let beta = 200.0 / (2.0 * 8.0 * E * 1000.0);
        assert!(rel(opt.beta_star, beta) < 1e-6);
        let value = 2.0 * (-200.0f64.powi(2) / (4.0 * 8.0 * E * 1000.0)).exp();
        assert!(rel(opt.result.value, value) < 1e-6);
        assert!((opt.result.value - 1.263).abs() < 5e-4);
        assert!(opt.beta0 > 0.0 && opt.beta0 < beta);
    }

    #[test]
    fn optimum_shrinks_with_eps() {
        let scheme = make_blocking(&[1000], &[10], &[10]).unwrap();
        let opt = optimize_beta(&iid_spec(), &[1000], &scheme, 1e-8).unwrap();
        assert!(opt.beta_star < 1e-9);
        assert!((opt.result.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_or_unbounded_specs_are_rejected() {
        let scheme = make_blocking(&[1000], &[10], &[10]).unwrap();
        assert!(matches!(
            bernstein_bound(&iid_spec(), &[999], &scheme, 0.001, 1.0),
            Err(BoundError::SchemeMismatch { .. })
        ));
        let tailed = FieldSpec::tailed(1, 1.0, TailParams::new(2.0, 0.5, 2.0).unwrap(), MixingModel::independent()).unwrap();
        assert!(matches!(
            bernstein_bound(&tailed, &[1000], &scheme, 0.001, 1.0),
            Err(BoundError::NeedsBound(_))
        ));
        assert!(FieldSpec::bounded(1, 1.0, 2.0, MixingModel::independent()).is_err());
        assert!(TailParams::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mixing_factor_with_dependence() {
        // N=2, alpha(k)=1/4 for k<=2, q_min=2: alpha(q)=1/4
        let spec = FieldSpec::bounded(2, 1.0, 0.5, MixingModel::m_dependent(2)).unwrap();
        let scheme = make_blocking(&[20, 20], &[4, 4], &[2, 2]).unwrap();
        let (mix, ln_mix) = mixing_exponent(spec.mixing(), &scheme);
        let expected = 12.0 * E.sqrt() * 4.0 * (400.0 / 16.0) * 0.25f64.powf(16.0 / (400.0 * 5.0));
        assert!(rel(mix, expected) < 1e-12);
        assert!(rel(ln_mix, expected.ln()) < 1e-12);
        // separated blocks remove the mixing factor
        let scheme = make_blocking(&[20, 20], &[4, 4], &[3, 3]).unwrap();
        assert_eq!(mixing_exponent(spec.mixing(), &scheme).0, 0.0);
        let r = bernstein_bound(&spec, &[20, 20], &scheme, 1e-4, 50.0).unwrap();
        let abar = 1.0 * 0.25 + 2.0 * 0.25;
        let quad = 64.0 * E * (0.5 + 12.0 * 8.0 * abar) * 400.0;
        assert!(rel(r.exp_exponent, -1e-4 * 50.0 + quad * 1e-8) < 1e-12);
    }

    #[test]
    fn truncation_term_example() {
        let tail = TailParams::new(2.0, 1.0, 1.0).unwrap();
        let spec = FieldSpec::tailed(1, 1.0, tail, MixingModel::independent()).unwrap();
        let scheme = make_blocking(&[1000], &[1], &[1]).unwrap();
        let r = ext_bernstein_bound(&spec, &[1000], &scheme, 1e-4, 300.0, 10.0).unwrap();
        let expected = 12.0 / 300.0 * 2.0 * (-10.0f64).exp() * 1000.0;
        assert!(rel(r.truncation_term, expected) < 1e-10);
        assert!((r.truncation_term - 0.003632).abs() < 1e-6);
        assert_eq!(r.kind, BoundKind::Extended);
        let zero = ext_bernstein_bound(&spec, &[1000], &scheme, 1e-4, 0.0, 10.0).unwrap();
        assert!(zero.value >= 2.0 + zero.truncation_term || zero.value.is_infinite());
    }

    #[test]
    fn extended_beta_limit_uses_twice_the_level() {
        let tail = TailParams::new(2.0, 1.0, 1.0).unwrap();
        let spec = FieldSpec::tailed(1, 1.0, tail, MixingModel::independent()).unwrap();
        let scheme = make_blocking(&[1000], &[1], &[1]).unwrap();
        // 2^2 * (2 * 10) * 1 * e * beta < 1
        let limit = 1.0 / (4.0 * 20.0 * E);
        assert!(ext_bernstein_bound(&spec, &[1000], &scheme, limit * 0.999, 300.0, 10.0).unwrap().feasible);
        assert!(!ext_bernstein_bound(&spec, &[1000], &scheme, limit * 1.001, 300.0, 10.0).unwrap().feasible);
    }

    #[test]
    fn truncation_search_dominates_its_grid() {
        let tail = TailParams::new(2.0, 0.5, 2.0).unwrap();
        let spec = FieldSpec::tailed(1, 1.0, tail, MixingModel::independent()).unwrap();
        let n = [10_000];
        let scheme = make_blocking(&n, &[1], &[1]).unwrap();
        let coarse = optimize_truncation(&spec, &n, &scheme, 5000.0).unwrap();
        let at_sigma = optimize_beta_extended(&spec, &n, &scheme, 5000.0, 1.0).unwrap();
        assert!(coarse.result.value <= at_sigma.result.value);
        assert!(coarse.result.truncation_term <= 1.0);
        let fine = optimize_truncation_on_grid(&spec, &n, &scheme, 5000.0, 2).unwrap();
        assert!(fine.result.value <= coarse.result.value);
        assert_eq!(coarse.grid_points, 31);
    }

    #[test]
    fn truncation_split_identity() {
        for &b in &[0.5, 1.0, 3.0] {
            for i in -40..=40 {
                let z = i as f64 * 0.125;
                for z in [z, b, -b] {
                    let (up, lo, mid) = truncation_split(z, b);
                    assert_eq!(up + lo + mid, z);
                    assert!(up >= 0.0 && lo <= 0.0 && mid.abs() <= b);
                }
            }
        }
    }

    #[test]
    fn default_blocking_examples() {
        let d = default_blocking(&[1_000_000, 1_000_000]);
        assert!(d.follows_rule);
        assert_eq!(d.p, vec![138_155, 138_155]);
        let d = default_blocking(&[100, 100]);
        assert!(!d.follows_rule);
        assert_eq!(d.rule, vec![99, 99]);
        assert_eq!(d.infeasible_axes, vec![1, 2]);
        assert_eq!(d.p, vec![25, 25]);
        let d = default_blocking(&[10_000]);
        assert!(d.follows_rule);
        assert_eq!(d.p, vec![921]);
    }

    #[test]
    fn corollary_examples() {
        let spec = FieldSpec::bounded(1, 1.0, 1.0, MixingModel::exponential(0.25, 1.0).unwrap()).unwrap();
        let c = corollary_bound(&spec, &[10_000], 500.0, 1.0).unwrap();
        assert_eq!(c.result.scheme.q_min(), 921);
        assert!(c.first_factor_exponent < 1e-9);
        assert!((c.result.mixing_factor - 1.0).abs() < 1e-9);
        assert!(c.denominator_surrogate > 2.0 * 10_000.0);

        let spec2 = FieldSpec::bounded(2, 1.0, 1.0, MixingModel::exponential(0.25, 1.0).unwrap()).unwrap();
        assert!(matches!(
            corollary_bound(&spec2, &[10, 10], 5.0, 0.5),
            Err(BoundError::AsymptoticRegime { .. })
        ));
        assert!(matches!(corollary_bound(&spec2, &[7, 7], 5.0, 0.5), Err(BoundError::Precondition(_))));
        assert!(matches!(
            corollary_bound(&spec2, &[10_000, 100_000], 5.0, 0.5),
            Err(BoundError::Precondition(_))
        ));
        assert!(matches!(corollary_bound(&iid_spec(), &[10_000], 5.0, 1.0), Err(BoundError::NotExponential)));
    }

    #[test]
    fn corollary_exponent_falls_along_the_diagonal() {
        let spec = FieldSpec::bounded(2, 1.0, 1.0, MixingModel::exponential(0.25, 1.0).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 5..=20u64 {
            let m = 1000 * k;
            let c = corollary_bound(&spec, &[m, m], 1.0, 1.0).unwrap();
            assert!(c.ln_first_factor_exponent < prev, "m={m}");
            prev = c.ln_first_factor_exponent;
        }
    }

    proptest! {
        #[test]
        fn optimised_bound_beats_a_grid(
            n in 50u64..5000,
            p in 1u64..10,
            sigma2 in 0.01f64..1.0,
            m in 0u64..4,
            eps_frac in 0.01f64..0.5,
        ) {
            prop_assume!(2 * p < n);
            let spec = FieldSpec::bounded(1, 1.0, sigma2, MixingModel::m_dependent(m)).unwrap();
            let scheme = make_blocking(&[n], &[p], &[p]).unwrap();
            let eps = eps_frac * n as f64;
            let opt = optimize_beta(&spec, &[n], &scheme, eps).unwrap();
            prop_assert!(opt.result.feasible);
            let limit = beta_limit(&spec, &[n], &scheme).unwrap();
            for i in 1..=1000 {
                let beta = limit * i as f64 / 1001.0;
                let v = bernstein_bound(&spec, &[n], &scheme, beta, eps).unwrap().value;
                prop_assert!(opt.result.value <= v * (1.0 + 1e-9));
            }
        }

        #[test]
        fn optimised_bound_is_monotone_in_eps(e1 in 1.0f64..500.0, e2 in 1.0f64..500.0, m in 0u64..3) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let spec = FieldSpec::bounded(1, 1.0, 0.7, MixingModel::m_dependent(m)).unwrap();
            let scheme = make_blocking(&[1000], &[4], &[2]).unwrap();
            let a = optimize_beta(&spec, &[1000], &scheme, lo).unwrap().result.value;
            let b = optimize_beta(&spec, &[1000], &scheme, hi).unwrap().result.value;
            prop_assert!(b <= a * (1.0 + 1e-9));
            for beta in [1e-5, 1e-4, 1e-3] {
                let a = bernstein_bound(&spec, &[1000], &scheme, beta, lo).unwrap().value;
                let b = bernstein_bound(&spec, &[1000], &scheme, beta, hi).unwrap().value;
                prop_assert!(b <= a);
            }
        }

        #[test]
        fn independent_fields_reduce_to_the_plain_exponent(beta in 1e-6f64..1e-2, eps in 0.0f64..400.0, sigma2 in 0.0f64..1.0) {
            let spec = FieldSpec::bounded(1, 1.0, sigma2, MixingModel::independent()).unwrap();
            let scheme = make_blocking(&[1000], &[2], &[1]).unwrap();
            let r = bernstein_bound(&spec, &[1000], &scheme, beta, eps).unwrap();
            prop_assume!(r.feasible);
            prop_assert_eq!(r.mixing_factor, 1.0);
            let want = 2.0 * (-beta * eps + 8.0 * beta * beta * E * sigma2 * 1000.0).exp();
            prop_assert!(((r.value - want) / want).abs() < 1e-12);
            prop_assert!(((r.value - 2.0 * r.mixing_factor * r.exp_factor) / r.value).abs() < 1e-12);
        }
    }
}
