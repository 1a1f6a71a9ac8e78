//! Strong-mixing coefficient models and the lattice shell counts used by the
//! variance step of the bound.
//!
//! A [`MixingModel`] is a certified upper bound `k -> alpha(k)` for the
//! alpha-mixing coefficient of a field. Every model is clamped to `[0, 1/4]`
//! and nonincreasing in `k`.

mod davydov;
mod estimate;

pub use davydov::{davydov_check, DavydovCheck, JointTable, MAX_BRUTE_FORCE_VALUES};
pub use estimate::{estimate_alpha_lower, ThresholdEvents};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest value an alpha-mixing coefficient can take.
pub const ALPHA_CAP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixingError {
    #[error("invalid mixing model: {0}")]
    InvalidModel(String),
    #[error("shell count for N={dim}, u={u} overflows 128 bits")]
    Overflow { dim: u32, u: u64 },
    #[error("invalid joint table: {0}")]
    InvalidTable(String),
    #[error("exponents are not Hoelder conjugate: 1/p + 1/q + 1/r = {sum}")]
    NotConjugate { sum: f64 },
    #[error("exponent {0} is below 1")]
    ExponentBelowOne(f64),
    #[error("{count} distinct values on one marginal; brute force is capped at {cap}")]
    Intractable { count: usize, cap: usize },
    #[error("no samples")]
    EmptySamples,
    #[error("invalid sample layout: {0}")]
    SampleLayout(String),
}

/// `k -> alpha(k)` upper bound for a field's mixing coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixingConfig", into = "MixingConfig")]
pub enum MixingModel {
    /// Independent beyond distance `m`; `alpha(k) = 1/4` for `k <= m`.
    MDependent { m: u64 },
    /// `alpha(k) = min(1/4, c0 * exp(-c1 * k))`.
    Exponential { c0: f64, c1: f64 },
    /// `alpha(k) = min(1/4, values[k - 1])`, zero past the end.
    Tabulated { values: Vec<f64> },
}

impl MixingModel {
    pub fn independent() -> Self {
        MixingModel::MDependent { m: 0 }
    }

    pub fn m_dependent(m: u64) -> Self {
        MixingModel::MDependent { m }
    }

    pub fn exponential(c0: f64, c1: f64) -> Result<Self, MixingError> {
        if !(c0 > 0.0 && c0.is_finite() && c1 > 0.0 && c1.is_finite()) {
            return Err(MixingError::InvalidModel(format!(
                "exponential model needs finite c0 > 0 and c1 > 0, got c0={c0}, c1={c1}"
            )));
        }
        Ok(MixingModel::Exponential { c0, c1 })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self, MixingError> {
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(MixingError::InvalidModel(format!(
                "tabulated alpha must be finite and nonnegative, got {bad}"
            )));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(MixingError::InvalidModel(
                "tabulated alpha must be nonincreasing".into(),
            ));
        }
        Ok(MixingModel::Tabulated { values })
    }

    /// `alpha(k)`; `k = 0` returns the cap.
    pub fn alpha(&self, k: u64) -> f64 {
        if k == 0 {
            return ALPHA_CAP;
        }
        match self {
            MixingModel::MDependent { m } => {
                if k <= *m {
                    ALPHA_CAP
                } else {
                    0.0
                }
            }
            MixingModel::Exponential { .. } => self.ln_alpha(k).exp(),
            MixingModel::Tabulated { values } => values
                .get((k - 1) as usize)
                .map_or(0.0, |v| v.min(ALPHA_CAP)),
        }
    }

    /// `ln alpha(k)`, `-inf` where alpha vanishes. Exact for the exponential
    /// model even where `alpha(k)` itself underflows.
    pub fn ln_alpha(&self, k: u64) -> f64 {
        match self {
            MixingModel::Exponential { c0, c1 } if k > 0 => {
                (c0.ln() - c1 * k as f64).min(ALPHA_CAP.ln())
            }
            _ => self.alpha(k).ln(),
        }
    }

    /// Smallest `m` with `alpha(k) = 0` for all `k > m`, if any.
    pub fn dependence_range(&self) -> Option<u64> {
        match self {
            MixingModel::MDependent { m } => Some(*m),
            MixingModel::Exponential { .. } => None,
            MixingModel::Tabulated { values } => {
                Some(values.iter().rposition(|v| *v > 0.0).map_or(0, |i| i as u64 + 1))
            }
        }
    }

    pub fn is_independent(&self) -> bool {
        self.dependence_range() == Some(0)
    }
}

/// Config-file shape: keys `kind`, `m`, `c0`, `c1`, `table`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
}

impl TryFrom<MixingConfig> for MixingModel {
    type Error = MixingError;

    fn try_from(cfg: MixingConfig) -> Result<Self, MixingError> {
        let missing = |key: &str| MixingError::InvalidModel(format!("kind '{}' needs key '{key}'", cfg.kind));
        match cfg.kind.as_str() {
            "iid" | "independent" => Ok(MixingModel::independent()),
            "m-dependent" | "exact-m-dependent" => {
                Ok(MixingModel::m_dependent(cfg.m.ok_or_else(|| missing("m"))?))
            }
            "exponential" => MixingModel::exponential(
                cfg.c0.ok_or_else(|| missing("c0"))?,
                cfg.c1.ok_or_else(|| missing("c1"))?,
            ),
            "tabulated" => MixingModel::tabulated(cfg.table.clone().ok_or_else(|| missing("table"))?),
            other => Err(MixingError::InvalidModel(format!(
                "unknown kind '{other}' (expected m-dependent, exponential or tabulated)"
            ))),
        }
    }
}

impl From<MixingModel> for MixingConfig {
    fn from(model: MixingModel) -> Self {
        let mut cfg = MixingConfig {
            kind: String::new(),
            m: None,
            c0: None,
            c1: None,
            table: None,
        };
        match model {
            MixingModel::MDependent { m } => {
                cfg.kind = "m-dependent".into();
                cfg.m = Some(m);
            }
            MixingModel::Exponential { c0, c1 } => {
                cfg.kind = "exponential".into();
                cfg.c0 = Some(c0);
                cfg.c1 = Some(c1);
            }
            MixingModel::Tabulated { values } => {
                cfg.kind = "tabulated".into();
                cfg.table = Some(values);
            }
        }
        cfg
    }
}

/// Number of lattice points at `d_inf` distance exactly `u` from a point of
/// `Z^N`: `(2u + 1)^N - (2u - 1)^N`.
pub fn shell_count(dim: u32, u: u64) -> Result<u128, MixingError> {
    let overflow = MixingError::Overflow { dim, u };
    let outer = (2 * u as u128 + 1).checked_pow(dim).ok_or(overflow.clone())?;
    let inner = (2 * u as u128 - 1).checked_pow(dim).ok_or(overflow)?;
    Ok(outer - inner)
}

/// Least `gamma` with `shell_count(N, u) <= gamma * u^(N-1)` for every `u >= 1`.
///
/// The ratio is largest at `u = 1`, so this is `3^N - 1` (exact in `f64` for
/// `N <= 33`).
pub fn gamma_min(dim: u32) -> f64 {
    3f64.powi(dim as i32) - 1.0
}

/// `alpha_bar_k = sum_{u=1}^{k} u^(N-1) alpha(u)`.
pub fn alpha_bar(model: &MixingModel, k: u64, dim: u32) -> f64 {
    let mut total = 0.0;
    for u in 1..=k {
        let a = model.alpha(u);
        if a == 0.0 {
            // nonincreasing: nothing further contributes
            break;
        }
        total += (u as f64).powi(dim as i32 - 1) * a;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_shell(dim: u32, u: i64) -> u128 {
        let side = (2 * u + 1) as usize;
        let total = side.pow(dim);
        (0..total)
            .filter(|&idx| {
                let mut rest = idx;
                let mut dist = 0i64;
                for _ in 0..dim {
                    let c = (rest % side) as i64 - u;
                    rest /= side;
                    dist = dist.max(c.abs());
                }
                dist == u
            })
            .count() as u128
    }

    #[test]
    fn shell_count_examples() {
        assert_eq!(shell_count(2, 1).unwrap(), 8);
        assert_eq!(shell_count(2, 3).unwrap(), 24);
        assert_eq!(shell_count(3, 1).unwrap(), 26);
        assert_eq!(brute_shell(2, 3), 24);
        assert!(shell_count(200, 1000).is_err());
    }

    #[test]
    fn shell_count_matches_enumeration() {
        for dim in 1..=3 {
            for u in 1..=5 {
                assert_eq!(shell_count(dim, u as u64).unwrap(), brute_shell(dim, u), "N={dim} u={u}");
            }
        }
    }

    #[test]
    fn gamma_min_examples() {
        assert_eq!(gamma_min(1), 2.0);
        assert_eq!(gamma_min(2), 8.0);
        assert_eq!(gamma_min(3), 26.0);
    }

    #[test]
    fn gamma_min_is_the_largest_ratio() {
        for dim in 1..=6u32 {
            let gamma = gamma_min(dim) as u128;
            let mut attained = false;
            for u in 1..=2_000u64 {
                let shell = shell_count(dim, u).unwrap();
                let scale = (u as u128).pow(dim - 1);
                assert!(shell <= gamma * scale);
                attained |= shell == gamma * scale;
            }
            assert!(attained);
        }
    }

    #[test]
    fn alpha_bar_examples() {
        assert_eq!(alpha_bar(&MixingModel::independent(), 9, 3), 0.0);
        let geometric = MixingModel::tabulated((1..=10).map(|u| 4f64.powi(-u)).collect()).unwrap();
        assert!((alpha_bar(&geometric, 3, 2) - 0.421875).abs() < 1e-15);
        assert_eq!(alpha_bar(&MixingModel::m_dependent(2), 5, 1), 0.5);
    }

    #[test]
    fn models_are_capped() {
        let m = MixingModel::exponential(3.0, 0.1).unwrap();
        assert_eq!(m.alpha(1), ALPHA_CAP);
        let t = MixingModel::tabulated(vec![0.9, 0.2, 0.0]).unwrap();
        assert_eq!((t.alpha(1), t.alpha(2), t.alpha(3), t.alpha(40)), (0.25, 0.2, 0.0, 0.0));
        assert_eq!(t.dependence_range(), Some(2));
        assert!(MixingModel::tabulated(vec![0.1, 0.2]).is_err());
        assert!(MixingModel::exponential(0.0, 1.0).is_err());
    }

    #[test]
    fn ln_alpha_survives_underflow() {
        let m = MixingModel::exponential(0.25, 1.0).unwrap();
        assert_eq!(m.alpha(921), 0.0);
        assert!((m.ln_alpha(921) - (0.25f64.ln() - 921.0)).abs() < 1e-9);
        assert_eq!(MixingModel::m_dependent(1).ln_alpha(2), f64::NEG_INFINITY);
    }

    #[test]
    fn config_round_trip_and_rejection() {
        let m: MixingModel = serde_json::from_str(r#"{"kind":"exponential","c0":0.25,"c1":1}"#).unwrap();
        assert_eq!(m, MixingModel::Exponential { c0: 0.25, c1: 1.0 });
        let back: MixingModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<MixingModel>(r#"{"kind":"m-dependent","m":1,"x":2}"#).is_err());
        assert!(serde_json::from_str::<MixingModel>(r#"{"kind":"m-dependent"}"#).is_err());
    }

    fn any_model() -> impl Strategy<Value = MixingModel> {
        prop_oneof![
            (0u64..20).prop_map(MixingModel::m_dependent),
            (0.01f64..5.0, 0.01f64..3.0).prop_map(|(a, b)| MixingModel::exponential(a, b).unwrap()),
            proptest::collection::vec(0.0f64..1.0, 0..12).prop_map(|mut v| {
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                MixingModel::tabulated(v).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn alpha_in_range_and_nonincreasing(model in any_model()) {
            let mut prev = ALPHA_CAP;
            for k in 1..60 {
                let a = model.alpha(k);
                prop_assert!((0.0..=ALPHA_CAP).contains(&a));
                prop_assert!(a <= prev);
                prev = a;
            }
        }

        #[test]
        fn alpha_bar_monotone_and_additive(model in any_model(), dim in 1u32..4, k in 1u64..30, j in 1u64..30) {
            let head = alpha_bar(&model, k, dim);
            let whole = alpha_bar(&model, k + j, dim);
            prop_assert!(whole >= head);
            let tail: f64 = ((k + 1)..=(k + j)).map(|u| (u as f64).powi(dim as i32 - 1) * model.alpha(u)).sum();
            prop_assert!((whole - head - tail).abs() <= 1e-12 * whole.max(1.0));
        }
    }
}
