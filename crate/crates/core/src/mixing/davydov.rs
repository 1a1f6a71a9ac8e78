//! Exact alpha for a pair of finite random variables and the covariance
//! inequality `|Cov(xi, eta)| <= 12 alpha^(1/r) ||xi||_p ||eta||_q`.

use serde::Serialize;

use super::MixingError;

/// Cap on distinct values per marginal; each side enumerates `2^cap` events.
pub const MAX_BRUTE_FORCE_VALUES: usize = 12;

const MASS_TOLERANCE: f64 = 1e-12;
const CONJUGATE_TOLERANCE: f64 = 1e-9;
const HOLDS_SLACK: f64 = 1e-12;

/// Joint law of `(xi, eta)` on finitely many values.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major, `mass[i * ys.len() + j] = P(xi = xs[i], eta = ys[j])`.
    mass: Vec<f64>,
}

fn canonical(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

impl JointTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, mass: Vec<f64>) -> Result<Self, MixingError> {
        if xs.is_empty() || ys.is_empty() {
            return Err(MixingError::InvalidTable("empty marginal".into()));
        }
        if mass.len() != xs.len() * ys.len() {
            return Err(MixingError::InvalidTable(format!(
                "{} masses for a {}x{} table",
                mass.len(),
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(MixingError::InvalidTable("non-finite value".into()));
        }
        if let Some(m) = mass.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(MixingError::InvalidTable(format!("invalid mass {m}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(MixingError::InvalidTable(format!("masses sum to {total}, not 1")));
        }
        let distinct = |v: &[f64]| {
            let mut s: Vec<u64> = v.iter().map(|x| canonical(*x).to_bits()).collect();
            s.sort_unstable();
            s.dedup();
            s.len() == v.len()
        };
        if !distinct(&xs) || !distinct(&ys) {
            return Err(MixingError::InvalidTable("repeated marginal value".into()));
        }
        Ok(Self { xs, ys, mass })
    }

    /// Build from `(x, y, mass)` cells; repeated cells accumulate.
    pub fn from_cells(cells: &[(f64, f64, f64)]) -> Result<Self, MixingError> {
        let collect = |pick: fn(&(f64, f64, f64)) -> f64| {
            let mut v: Vec<f64> = cells.iter().map(|c| canonical(pick(c))).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
            v
        };
        let xs = collect(|c| c.0);
        let ys = collect(|c| c.1);
        let mut mass = vec![0.0; xs.len() * ys.len()];
        for &(x, y, m) in cells {
            let i = xs.iter().position(|v| *v == canonical(x)).expect("collected");
            let j = ys.iter().position(|v| *v == canonical(y)).expect("collected");
            mass[i * ys.len() + j] += m;
        }
        Self::new(xs, ys, mass)
    }

    /// Parse `x y mass` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, MixingError> {
        let mut cells = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed.as_deref() {
                Some([x, y, m]) => cells.push((*x, *y, *m)),
                _ => {
                    return Err(MixingError::InvalidTable(format!(
                        "line {}: expected `x y mass`, got `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_cells(&cells)
    }

    /// Product table of two independent marginals.
    pub fn independent(xs: Vec<f64>, px: &[f64], ys: Vec<f64>, py: &[f64]) -> Result<Self, MixingError> {
        let mass = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
        Self::new(xs, ys, mass)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.ys.len() + j]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.xs.len())
            .map(|i| (0..self.ys.len()).map(|j| self.mass(i, j)).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ys.len())
            .map(|j| (0..self.xs.len()).map(|i| self.mass(i, j)).sum())
            .collect()
    }

    pub fn covariance(&self) -> f64 {
        let (px, py) = (self.marginal_x(), self.marginal_y());
        let ex: f64 = self.xs.iter().zip(&px).map(|(x, p)| x * p).sum();
        let ey: f64 = self.ys.iter().zip(&py).map(|(y, p)| y * p).sum();
        let mut c = 0.0;
        for (i, x) in self.xs.iter().enumerate() {
            for (j, y) in self.ys.iter().enumerate() {
                c += (x - ex) * (y - ey) * self.mass(i, j);
            }
        }
        c
    }

    /// `sup |P(A and B) - P(A) P(B)|` over every `A` in `sigma(xi)` and `B`
    /// in `sigma(eta)`, by enumerating both power sets.
    pub fn alpha(&self) -> Result<f64, MixingError> {
        let (a, b) = (self.xs.len(), self.ys.len());
        for count in [a, b] {
            if count > MAX_BRUTE_FORCE_VALUES {
                return Err(MixingError::Intractable {
                    count,
                    cap: MAX_BRUTE_FORCE_VALUES,
                });
            }
        }
        // subset sums of the y-marginal
        let py = self.marginal_y();
        let q_b = subset_sums(&py);
        let mut row = vec![0.0; b];
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; b]; 1 << a];
        let mut best: f64 = 0.0;
        for set_a in 1usize..(1 << a) {
            let low = set_a.trailing_zeros() as usize;
            let prev = set_a & (set_a - 1);
            for j in 0..b {
                row[j] = rows[prev][j] + self.mass(low, j);
            }
            rows[set_a].copy_from_slice(&row);
            let p_a: f64 = row.iter().sum();
            let joint = subset_sums(&row);
            for (ab, qb) in joint.iter().zip(&q_b) {
                best = best.max((ab - p_a * qb).abs());
            }
        }
        Ok(best)
    }
}

fn subset_sums(weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << weights.len()];
    for set in 1usize..out.len() {
        let low = set.trailing_zeros() as usize;
        out[set] = out[set & (set - 1)] + weights[low];
    }
    out
}

/// `||v||_p` under the given marginal; `p = inf` is the max over the support.
fn lp_norm(values: &[f64], probs: &[f64], p: f64) -> f64 {
    let scale = values
        .iter()
        .zip(probs)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    if p.is_infinite() || scale == 0.0 {
        return scale;
    }
    let inner: f64 = values
        .iter()
        .zip(probs)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, w)| w * (v.abs() / scale).powf(p))
        .sum();
    scale * inner.powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DavydovCheck {
    /// `|Cov(xi, eta)|`
    pub lhs: f64,
    pub alpha: f64,
    /// `12 alpha^(1/r) ||xi||_p ||eta||_q`
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluate both sides of the covariance inequality with exact alpha.
///
/// `p`, `q`, `r` may be `f64::INFINITY`.
pub fn davydov_check(joint: &JointTable, p: f64, q: f64, r: f64) -> Result<DavydovCheck, MixingError> {
    for e in [p, q, r] {
        if e.is_nan() || e < 1.0 {
            return Err(MixingError::ExponentBelowOne(e));
        }
    }
    let sum = 1.0 / p + 1.0 / q + 1.0 / r;
    if (sum - 1.0).abs() > CONJUGATE_TOLERANCE {
        return Err(MixingError::NotConjugate { sum });
    }
    let alpha = joint.alpha()?;
    let lhs = joint.covariance().abs();
    let rhs = 12.0
        * alpha.powf(1.0 / r)
        * lp_norm(&joint.xs, &joint.marginal_x(), p)
        * lp_norm(&joint.ys, &joint.marginal_y(), q);
    Ok(DavydovCheck {
        lhs,
        alpha,
        rhs,
        holds: lhs <= rhs + HOLDS_SLACK,
    })
}
