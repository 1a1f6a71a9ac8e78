//! Empirical lower bound for `alpha(F(I), F(J))` from replicated samples.
//!
//! The supremum is restricted to threshold rectangles
//! `A = { Z(s) <= c_s for s in I }`, `B = { Z(t) <= c_t for t in J }` where
//! each threshold is a marginal sample quantile or `+inf`. The estimate is
//! `max |P^(A and B) - P^(A) P^(B)|` over that finite class.

use super::MixingError;

const MAX_POINTS_PER_SIDE: usize = 3;

/// Threshold grid given as marginal quantile levels in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEvents {
    levels: Vec<f64>,
}

impl Default for ThresholdEvents {
    /// Five-point grid at `1/6, ..., 5/6`.
    fn default() -> Self {
        Self {
            levels: (1..=5).map(|k| k as f64 / 6.0).collect(),
        }
    }
}

impl ThresholdEvents {
    pub fn new(mut levels: Vec<f64>) -> Result<Self, MixingError> {
        if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(MixingError::SampleLayout("quantile levels must lie in (0, 1)".into()));
        }
        levels.sort_by(f64::total_cmp);
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn thresholds(&self, column: &mut [f64]) -> Vec<f64> {
        column.sort_by(f64::total_cmp);
        let n = column.len();
        self.levels
            .iter()
            .map(|l| {
                let rank = ((l * n as f64).ceil() as usize).clamp(1, n);
                column[rank - 1]
            })
            .collect()
    }
}

/// `samples_i[r]` holds replication `r` at the points of `I`, `samples_j[r]`
/// the same replication at the points of `J`.
pub fn estimate_alpha_lower(
    samples_i: &[Vec<f64>],
    samples_j: &[Vec<f64>],
    events: &ThresholdEvents,
) -> Result<f64, MixingError> {
    let reps = samples_i.len();
    if reps == 0 {
        return Err(MixingError::EmptySamples);
    }
    if samples_j.len() != reps {
        return Err(MixingError::SampleLayout(format!(
            "{reps} samples on I but {} on J",
            samples_j.len()
        )));
    }
    let width_i = samples_i[0].len();
    let width_j = samples_j[0].len();
    for (w, side) in [(width_i, "I"), (width_j, "J")] {
        if w == 0 || w > MAX_POINTS_PER_SIDE {
            return Err(MixingError::SampleLayout(format!(
                "{side} must hold 1..={MAX_POINTS_PER_SIDE} points, got {w}"
            )));
        }
    }
    if samples_i.iter().any(|s| s.len() != width_i) || samples_j.iter().any(|s| s.len() != width_j) {
        return Err(MixingError::SampleLayout("ragged samples".into()));
    }

    let dims = width_i + width_j;
    let row = |r: usize, c: usize| {
        if c < width_i {
            samples_i[r][c]
        } else {
            samples_j[r][c - width_i]
        }
    };
    let grids: Vec<Vec<f64>> = (0..dims)
        .map(|c| {
            let mut column: Vec<f64> = (0..reps).map(|r| row(r, c)).collect();
            events.thresholds(&mut column)
        })
        .collect();

    // level(z) = first grid index with z <= c, or grid.len() (only the +inf event)
    let side = events.levels.len() + 1;
    let cells = side.pow(dims as u32);
    let mut hist = vec![0u64; cells];
    for r in 0..reps {
        let mut idx = 0usize;
        for (c, grid) in grids.iter().enumerate() {
            let z = row(r, c);
            let level = grid.iter().position(|t| z <= *t).unwrap_or(grid.len());
            idx = idx * side + level;
        }
        hist[idx] += 1;
    }
    // prefix sums along each axis: hist[j] = #{ level_c <= j_c for all c }
    let mut stride = 1usize;
    for _ in 0..dims {
        for i in 0..cells {
            if !(i / stride).is_multiple_of(side) {
                hist[i] += hist[i - stride];
            }
        }
        stride *= side;
    }

    let n = reps as f64;
    let cells_j = side.pow(width_j as u32);
    let cells_i = side.pow(width_i as u32);
    let all_j = cells_j - 1;
    let all_i = cells_i - 1;
    let mut best: f64 = 0.0;
    for a in 0..cells_i {
        let p_a = hist[a * cells_j + all_j] as f64 / n;
        for b in 0..cells_j {
            let p_b = hist[all_i * cells_j + b] as f64 / n;
            let p_ab = hist[a * cells_j + b] as f64 / n;
            best = best.max((p_ab - p_a * p_b).abs());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_dependent_coins_reach_a_quarter() {
        let xs: Vec<Vec<f64>> = (0..1000).map(|r| vec![if r % 2 == 0 { -1.0 } else { 1.0 }]).collect();
        let est = estimate_alpha_lower(&xs, &xs, &ThresholdEvents::default()).unwrap();
        assert!((est - 0.25).abs() < 1e-12);
    }

    #[test]
    fn single_sample_is_degenerate_but_allowed() {
        let est = estimate_alpha_lower(&[vec![0.3]], &[vec![-2.0, 1.0]], &ThresholdEvents::default()).unwrap();
        assert!((0.0..=1.0).contains(&est));
    }

    #[test]
    fn rejects_bad_layouts() {
        let ev = ThresholdEvents::default();
        assert!(matches!(estimate_alpha_lower(&[], &[], &ev), Err(MixingError::EmptySamples)));
        assert!(estimate_alpha_lower(&[vec![1.0; 4]], &[vec![1.0]], &ev).is_err());
        assert!(estimate_alpha_lower(&[vec![1.0], vec![1.0, 2.0]], &[vec![1.0], vec![1.0]], &ev).is_err());
        assert!(ThresholdEvents::new(vec![0.0, 0.5]).is_err());
    }
}
